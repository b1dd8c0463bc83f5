""" Settings for the command-line tool and the exhaustive checkers.

Settings are layered the same way a Flask app factory layers
`app.config`: built-in defaults, then an optional settings file named by
the `CPCOMPRESS_SETTINGS` environment variable, then an explicit
`test_config` mapping when one is passed in.
"""

import os
from flask import Config

SETTINGS_ENVVAR = 'CPCOMPRESS_SETTINGS'

DEFAULTS = {
    # Largest instance the brute-force oracle will enumerate:
    'ORACLE_BOUND': 10,
    # Largest instance `simulate --enumerate` will enumerate:
    'ENUMERATION_LIMIT': 10,
    # Largest random instance produced for oracle fuzzing:
    'FUZZ_MAX_NODES': 8,
    # Worker processes for per-EC compression:
    'MAX_JOBS': 4,
    # simulate_solution gives up after
    # DIVERGENCE_FACTOR * |V| * |attributes seen| rounds:
    'DIVERGENCE_FACTOR': 2,
    # Attribute pairs sampled when checking rank-equivalence:
    'RANK_SAMPLES': 64,
}


def load_config(test_config=None) -> Config:
    """ Builds the settings mapping. """
    config = Config(os.getcwd())
    config.from_mapping(DEFAULTS)

    if test_config is None:
        # Load the settings file, if one is named, when not testing:
        config.from_envvar(SETTINGS_ENVVAR, silent=True)
    else:
        # Load the test config if passed in:
        config.from_mapping(test_config)

    return config
