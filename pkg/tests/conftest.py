import logging

from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

# desk-scale configs trip the tiny-block notice constantly; keep test output clean
logging.getLogger("era_st").setLevel(logging.ERROR)
