"""
Scenarios built on the training engine: experiments, ablations, baselines and selftests.
"""
