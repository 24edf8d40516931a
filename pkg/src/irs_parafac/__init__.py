"""PARAFAC-based estimation of the time-varying combined channel in
IRS-assisted MIMO uplinks, with LS and Khatri-Rao factorization baselines."""

__version__ = "0.1.0"
