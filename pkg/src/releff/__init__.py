"""releff - relative efficiency of covariate-adjusted trial estimators from external data."""
