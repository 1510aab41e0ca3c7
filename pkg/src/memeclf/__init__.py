"""Explainable case-based meme classification over precomputed multimodal features.

Two explanation pipelines share one feature store: an example-based route
(trainable sigmoid head whose L3 embedding feeds exact cosine retrieval of
similar training memes) and a prototype-based route (single-pass class-wise
prototype learning with rule-based local/global decisions).
"""

__version__ = "0.1.0"
