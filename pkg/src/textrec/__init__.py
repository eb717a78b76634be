"""textrec: recommendations driven by an editable natural-language profile.

A frozen collaborative-filtering backbone supplies a history latent, a
trainable encoder maps the user's summary (or genre profile) into the same
space via an optimal-transport alignment penalty, and a runtime mixing
weight slides recommendations between the two. The bench subpackage
measures how far summary edits actually move the rankings.
"""

__version__ = "0.1.0"
