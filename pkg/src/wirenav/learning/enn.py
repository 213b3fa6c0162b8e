"""Joint state encoder: image, segmentation mask, and proprioception.

Three feature streams are concatenated into one vector Z: a conv trunk over
the grayscale render (256), a second conv trunk over the wire mask (256),
and a two-layer MLP over stacked joint positions and velocities (128), for
640 features total. The two conv trunks are separate networks by default; a
share flag makes the mask stream reuse the image trunk's parameters.
"""

import numpy as np

from .nets import NetError, cnn_trunk, joint_mlp


class ENNFeatures:
    """Concatenated image/mask/joint features over one flat parameter vector."""

    def __init__(self, image_shape=(1, 80, 80), joint_dim: int = 336,
                 share_trunks: bool = False):
        self.image_trunk = cnn_trunk(image_shape)
        self.mask_trunk = self.image_trunk if share_trunks else cnn_trunk(image_shape)
        self.mlp = joint_mlp(joint_dim)
        self.share_trunks = bool(share_trunks)
        self.joint_dim = int(joint_dim)
        self.feature_dim = (
            self.image_trunk.output_shape[0]
            + self.mask_trunk.output_shape[0]
            + self.mlp.output_shape[0]
        )
        n_img = self.image_trunk.param_count
        n_mask = 0 if share_trunks else self.mask_trunk.param_count
        self._img_sl = slice(0, n_img)
        self._mask_sl = self._img_sl if share_trunks else slice(n_img, n_img + n_mask)
        self._mlp_sl = slice(n_img + n_mask, n_img + n_mask + self.mlp.param_count)
        self.param_count = n_img + n_mask + self.mlp.param_count

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        params = np.zeros(self.param_count)
        params[self._img_sl] = self.image_trunk.init_params(rng)
        if not self.share_trunks:
            params[self._mask_sl] = self.mask_trunk.init_params(rng)
        params[self._mlp_sl] = self.mlp.init_params(rng)
        return params

    def features(self, params, images, masks, qpos, qvel) -> np.ndarray:
        """(N, feature_dim) encoding of a batch of observations."""
        images = np.asarray(images, dtype=np.float64)
        masks = np.asarray(masks, dtype=np.float64)
        if images.ndim == 3:
            images = images[:, None]
        if masks.ndim == 3:
            masks = masks[:, None]
        joints = np.concatenate(
            [np.asarray(qpos, dtype=np.float64), np.asarray(qvel, dtype=np.float64)],
            axis=1,
        )
        if joints.shape[1] != self.joint_dim:
            raise NetError(
                f"qpos+qvel stack has {joints.shape[1]} dims, expected {self.joint_dim}"
            )
        z_img = self.image_trunk.forward(params[self._img_sl], images)
        z_mask = self.mask_trunk.forward(params[self._mask_sl], masks)
        z_joint = self.mlp.forward(params[self._mlp_sl], joints)
        return np.concatenate([z_img, z_mask, z_joint], axis=1)

    def __call__(self, images, masks, qpos, qvel):
        """Labeling interface: uses parameters bound via bind()."""
        if not hasattr(self, "_bound"):
            raise NetError("call bind(params) before using the encoder as a labeler")
        return self.features(self._bound, images, masks, qpos, qvel)

    def bind(self, params) -> "ENNFeatures":
        """Attach a parameter vector so the encoder is directly callable."""
        self._bound = np.asarray(params, dtype=np.float64)
        if self._bound.shape != (self.param_count,):
            raise NetError(
                f"parameter vector has {self._bound.size} entries, "
                f"expected {self.param_count}"
            )
        return self
