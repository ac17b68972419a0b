pub const PRESET_NAMES: [&str; 7] = [
    "fig4b-450MHz",
    "fig4b-768MHz",
    "fig4b-1920MHz",
    "srs-20MHz",
    "fig4c-mmwave",
    "phy-ber-default",
    "positioning-grid5m",
];

/// TOML text of a bundled preset.
pub fn preset_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig4b-450MHz" => include_str!("../../presets/fig4b-450MHz.toml"),
        "fig4b-768MHz" => include_str!("../../presets/fig4b-768MHz.toml"),
        "fig4b-1920MHz" => include_str!("../../presets/fig4b-1920MHz.toml"),
        "srs-20MHz" => include_str!("../../presets/srs-20MHz.toml"),
        "fig4c-mmwave" => include_str!("../../presets/fig4c-mmwave.toml"),
        "phy-ber-default" => include_str!("../../presets/phy-ber-default.toml"),
        "positioning-grid5m" => include_str!("../../presets/positioning-grid5m.toml"),
        _ => return None,
    })
}
