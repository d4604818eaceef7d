"""Pretrain rating autoencoders and turn their codes into factor inits.

The user-side stack reconstructs each user's item row; the item-side stack
works on the transpose.  The code layers become the initial P and Q.
"""

import numpy as np

from trustrec.autoencoder import AutoencoderConfig, encode, rating_arrays, train_autoencoder
from trustrec.data import SplitSpec, split
from trustrec.synth import planted_factors


def pretrain(train_ratings, axis, config):
    targets, mask = rating_arrays(train_ratings, axis=axis)
    model = train_autoencoder(targets, mask, config)
    codes = encode(model, targets, mask)
    return model, codes


if __name__ == "__main__":
    ratings, _, _ = planted_factors(num_users=80, num_items=60, k=6, density=0.3, seed=0)
    train_ratings, _ = split(ratings, SplitSpec(0.8, seed=0))

    config = AutoencoderConfig(hidden_sizes=(32, 16, 6, 16, 32), learning_rate=0.02,
                               batch_size=16, epochs=120, seed=0)
    user_model, user_codes = pretrain(train_ratings, "users", config)
    item_model, item_codes = pretrain(train_ratings, "items", AutoencoderConfig(
        hidden_sizes=(32, 16, 6, 16, 32), learning_rate=0.02, batch_size=16,
        epochs=120, seed=1))

    history = user_model.loss_history
    print(f"user stack masked error: {history[0]:.4f} -> {history[-1]:.4f} "
          f"over {len(history)} epochs")
    history = item_model.loss_history
    print(f"item stack masked error: {history[0]:.4f} -> {history[-1]:.4f}")

    # codes come out row-per-user / row-per-item; the trainer wants factors first
    init_P, init_Q = user_codes.T, item_codes.T
    print(f"init_P {init_P.shape}, init_Q {init_Q.shape}")

    # unobserved inputs are multiplied away by the mask, so junk there is inert
    targets, mask = rating_arrays(train_ratings, axis="users")
    poked = targets + 1000.0 * (1.0 - mask)
    same = np.array_equal(encode(user_model, targets, mask), encode(user_model, poked, mask))
    print(f"codes ignore unobserved inputs: {same}")
