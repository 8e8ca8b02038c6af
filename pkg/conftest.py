def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte Carlo acceptance runs (deselect with -m 'not slow')")
