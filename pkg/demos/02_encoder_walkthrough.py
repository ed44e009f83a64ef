"""The encoder pipeline, stage by stage, at the published widths.

A sentence of n characters flows through: embedding lookup (n x 50),
five n-gram convolution sets of 100 maps each (n x 500), k-max pooling
back to the embedding width (n x 50), a highway gate mixing pooled
features with the raw embeddings (n x 50), and a bidirectional LSTM
(n x 200).
"""
import numpy as np

from segtag import encoder as enc
from segtag.encoder import CharIds, EncoderConfig

rng = np.random.default_rng(0)
n = 10

cfg = EncoderConfig(d=50, h=100, feature_map_sets=5, feature_maps=100)
params = enc.init_encoder_params(cfg, n_unigrams=30, n_bigrams=0, rng=rng)
ids = CharIds(uni=rng.integers(0, 30, size=n))

x = enc.embed_sentence(ids, params.table, cfg)
print("embeddings:        ", x.shape)

z = enc.conv_feature_maps(x, params.conv)
print("conv feature maps: ", z.shape, " (uni-gram .. 5-gram, 100 maps each)")

pooled = enc.kmax_pool(z, cfg.k_pool)
print("k-max pooled:      ", pooled.shape, " (k equals the embedding width)")

mixed = enc.highway_forward(x, pooled, params.highway)
print("highway mixed:     ", mixed.shape)

h = enc.blstm_forward(mixed, params.lstm_fwd, params.lstm_bwd)
print("BLSTM states:      ", h.shape, " (forward ++ backward)")

out = enc.encode(ids, params, cfg)
assert out.shape == (n, cfg.d_out)
print("\nencode() composes the whole stack:", out.shape)

# Topology switches realize the ablation grid: here, embeddings straight
# into a single-direction LSTM ("w/o CNN" row, LSTM column).
bare = EncoderConfig(d=50, h=100, use_conv=False, use_pooling=False,
                     use_highway=False, recurrent="lstm")
bare_params = enc.init_encoder_params(bare, n_unigrams=30, n_bigrams=0, rng=rng)
print("w/o CNN + LSTM:    ", enc.encode(ids, bare_params, bare).shape)

# And the windowed MLP baseline.
mlp = EncoderConfig(d=50, h=100, use_conv=False, use_pooling=False,
                    use_highway=False, recurrent="none", mlp_baseline=True, window=5)
mlp_params = enc.init_encoder_params(mlp, n_unigrams=30, n_bigrams=0, rng=rng)
print("MLP baseline (k=5):", enc.encode(ids, mlp_params, mlp).shape)
