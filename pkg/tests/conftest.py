from hypothesis import HealthCheck, settings

# Matrix-heavy properties can be slow on loaded CI machines; wall-clock
# deadlines would make them flaky without adding coverage.
settings.register_profile(
    "ci", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ci")
