"""Shared pytest config: prints a one-line verdict per acceptance check."""

_LABELS = {
    "test_gradient_oracle": "analytic gradients vs finite differences",
    "test_em_identities": "permittivity, Fresnel, Snell identities",
    "test_capon_recovery_and_distortionless": "beamformer AoA recovery",
    "test_range_pipeline": "range bin, resolution, distance law",
    "test_scattering_trends": "surface vs volumetric scattering trends",
    "test_moisture_trend_smooth_vs_rough": "dataset moisture response",
    "test_steering_angle_ablation": "multi-angle vs single-angle MAE",
    "test_module_ablation": "fusion vs partial-feature variants",
    "test_unseen_distance_degradation": "held-out distance degradation",
    "test_determinism_and_roundtrip": "byte-stable outputs, ingest parity",
    "test_end_to_end_accuracy": "overall MAE on the default dataset",
}


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            label = _LABELS.get(name, name)
            verdict = "PASS" if outcome == "passed" else outcome.upper()
            lines.append(f"{verdict:<5} {name:<40} {label}")
    if lines:
        terminalreporter.section("acceptance summary")
        for line in sorted(lines, key=lambda s: s.split()[1]):
            terminalreporter.write_line(line)
