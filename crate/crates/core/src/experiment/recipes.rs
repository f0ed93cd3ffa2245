//! Built-in experiment files for the standard scenarios.

/// Name and one-line description of every recipe.
pub const RECIPES: &[(&str, &str)] = &[
    ("coap_gain", "single-AP vs Co-AP at p1 = 0.7, p2 = 0.95, N = 10"),
    ("fig_decode_vs_m", "Soft-Co-AP decode probability and AoI vs m at (5, 6) dB"),
    ("fig_aoi_vs_snr", "AoI vs primary SNR 5..10 dB, secondary +1 dB, N = 10"),
    ("fig_aoi_vs_n", "Co-AP vs Soft-Co-AP AoI vs N at (5, 6) dB"),
    ("fig_aoi_vs_n_imbalanced", "as fig_aoi_vs_n with half the sensors at (10, 11) dB"),
    ("fig_multi_ap", "AoI with two and three APs, N = 30, (5, 6, 6) dB"),
    ("quant_bits_tradeoff", "m = 4 vs m = 8 at N = 10 and N = 30 with fixed decode probabilities"),
];

const MC_PHY: &str = "[decode]
source = \"montecarlo\"

[phy]
n_packets = 5000
info_bytes = 96
profile = \"flat\"
alpha = 0.25
implementation_loss_db = 6.0
snr_offset_db = 1.0
";

/// Experiment file text of a built-in recipe.
pub fn recipe(name: &str) -> Option<String> {
    let body = match name {
        "coap_gain" => "[experiment]
sweep = \"n_sensors\"
values = [10]
modes = [\"single_ap\", \"co_ap\"]
replications = 3

[system]
rounds = 10000

[decode]
source = \"bernoulli\"
p_primary = 0.7
p_secondary = 0.95
"
        .to_string(),
        "fig_decode_vs_m" => format!(
            "[experiment]
sweep = \"m\"
values = [1, 2, 3, 4, 5, 6, 7, 8]
modes = [\"soft_co_ap\"]

[system]
n_sensors = 10
rounds = 10000

{MC_PHY}snr_primary_db = 5.0
"
        ),
        "fig_aoi_vs_snr" => format!(
            "[experiment]
sweep = \"snr_primary\"
values = [5, 6, 7, 8, 9, 10]
modes = [\"single_ap\", \"co_ap\", \"soft_co_ap\"]
replications = 2

[system]
n_sensors = 10
m = [4, 8]
rounds = 10000

{MC_PHY}"
        ),
        "fig_aoi_vs_n" => format!(
            "[experiment]
sweep = \"n_sensors\"
values = [5, 10, 15, 20, 25, 30]
modes = [\"co_ap\", \"soft_co_ap\"]
replications = 2

[system]
m = [4, 8]
rounds = 10000

{MC_PHY}snr_primary_db = 5.0
"
        ),
        "fig_aoi_vs_n_imbalanced" => format!(
            "[experiment]
sweep = \"n_sensors\"
values = [10, 20, 30]
modes = [\"co_ap\", \"soft_co_ap\"]
replications = 2

[system]
m = [4, 8]
rounds = 10000

{MC_PHY}snr_primary_db = [5.0, 10.0]
"
        ),
        "fig_multi_ap" => format!(
            "[experiment]
sweep = \"n_aps\"
values = [2, 3]
modes = [\"co_ap\", \"soft_co_ap\"]
replications = 2

[system]
n_sensors = 30
m = [4]
rounds = 10000

{MC_PHY}snr_primary_db = 5.0
"
        ),
        "quant_bits_tradeoff" => "[experiment]
sweep = \"n_sensors\"
values = [10, 30]
modes = [\"co_ap\", \"soft_co_ap\"]
replications = 3

[system]
m = [4, 8]
rounds = 10000

[decode]
source = \"bernoulli\"
p_primary = 0.5
p_secondary = 0.6
p_joint = [0.5, 0.55, 0.6, 0.62, 0.64, 0.66, 0.68, 0.7]
"
        .to_string(),
        _ => return None,
    };
    let body = body.replacen("[experiment]\n", &format!("[experiment]\nname = \"{name}\"\n"), 1);
    Some(format!("# {name}: {}\n{body}", describe(name)?))
}

fn describe(name: &str) -> Option<&'static str> {
    RECIPES.iter().find(|(n, _)| *n == name).map(|(_, d)| *d)
}
