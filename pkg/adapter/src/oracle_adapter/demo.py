"""Demo predictors used by the conformance suite and for quick trials."""


def and_gate(x):
    """1 iff both of the two features are on."""
    return x[0] & x[1]


def or_gate(x):
    """1 iff at least one of the two features is on."""
    return x[0] | x[1]


def threshold_2_of_3(x):
    """Over 5 features: 1 iff at least 2 of features {0,1,2} are on."""
    return 1 if x[0] + x[1] + x[2] >= 2 else 0
