"""
Classical Model

Vocabulary, embeddings and the decoder-only transformer reference:
attention blocks, next-token distributions and the exact joint
distribution of generated tokens.
"""
