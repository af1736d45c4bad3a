//! The built-in benchmark suite: the 26 distinct convolution shapes of
//! ResNet-50.
//!
//! Derivation. ResNet-50 on 224x224x3 inputs is a 7x7/stride-2 stem
//! convolution, a 3x3/stride-2 max-pool, and four stages of bottleneck units
//! (3, 4, 6 and 3 units) running at 56x56, 28x28, 14x14 and 7x7. Each unit is
//! a 1x1 reduce, a 3x3, and a 1x1 expand; the first unit of every stage also
//! carries a 1x1 projection on its shortcut. Following the original
//! TensorFlow-style v1 definition, spatial downsampling happens in the *last*
//! unit of each of the first three stages: its 3x3 runs at stride 2 and its
//! expand therefore sees the halved resolution (shortcuts downsample by
//! pooling, which adds no convolution). Enumerating every convolution of that
//! network and deduplicating by the
//! (window, stride, rows, cols, input features, output features) tuple leaves
//! exactly the 26 entries below, in first-occurrence network order. In the
//! stem stage the projection and the expand collide on the same tuple
//! (64 -> 256 at 56x56), so it appears once.
//!
//! All entries use `Same` padding, matching the architecture's padded
//! convolutions. Batch is applied uniformly and is not part of the identity
//! of an entry.

use super::ConvConfig;
use crate::error::Result;

/// (label, window, stride, rows, cols, cin, cout)
const RESNET50_TUPLES: [(&str, usize, usize, usize, usize, usize, usize); 26] = [
    ("conv1", 7, 2, 224, 224, 3, 64),
    // Stage 2: three units at 56x56, bottleneck width 64, output 256.
    ("conv2_proj", 1, 1, 56, 56, 64, 256),
    ("conv2_reduce_a", 1, 1, 56, 56, 64, 64),
    ("conv2_3x3", 3, 1, 56, 56, 64, 64),
    ("conv2_reduce_b", 1, 1, 56, 56, 256, 64),
    ("conv2_3x3_down", 3, 2, 56, 56, 64, 64),
    ("conv2_expand_down", 1, 1, 28, 28, 64, 256),
    // Stage 3: four units at 28x28, bottleneck width 128, output 512.
    ("conv3_proj", 1, 1, 28, 28, 256, 512),
    ("conv3_reduce_a", 1, 1, 28, 28, 256, 128),
    ("conv3_3x3", 3, 1, 28, 28, 128, 128),
    ("conv3_expand", 1, 1, 28, 28, 128, 512),
    ("conv3_reduce_b", 1, 1, 28, 28, 512, 128),
    ("conv3_3x3_down", 3, 2, 28, 28, 128, 128),
    ("conv3_expand_down", 1, 1, 14, 14, 128, 512),
    // Stage 4: six units at 14x14, bottleneck width 256, output 1024.
    ("conv4_proj", 1, 1, 14, 14, 512, 1024),
    ("conv4_reduce_a", 1, 1, 14, 14, 512, 256),
    ("conv4_3x3", 3, 1, 14, 14, 256, 256),
    ("conv4_expand", 1, 1, 14, 14, 256, 1024),
    ("conv4_reduce_b", 1, 1, 14, 14, 1024, 256),
    ("conv4_3x3_down", 3, 2, 14, 14, 256, 256),
    ("conv4_expand_down", 1, 1, 7, 7, 256, 1024),
    // Stage 5: three units at 7x7, bottleneck width 512, output 2048, no
    // further downsampling.
    ("conv5_proj", 1, 1, 7, 7, 1024, 2048),
    ("conv5_reduce_a", 1, 1, 7, 7, 1024, 512),
    ("conv5_3x3", 3, 1, 7, 7, 512, 512),
    ("conv5_expand", 1, 1, 7, 7, 512, 2048),
    ("conv5_reduce_b", 1, 1, 7, 7, 2048, 512),
];

/// The 26 distinct ResNet-50 convolution configurations at the given batch
/// size, in network order.
pub fn resnet50_configs(batch: usize) -> Result<Vec<ConvConfig>> {
    RESNET50_TUPLES
        .iter()
        .map(|&(label, window, stride, rows, cols, cin, cout)| {
            ConvConfig::from_tuple(label, window, stride, rows, cols, cin, cout, batch)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selector::ConfigKey;

    #[test]
    fn suite_has_exactly_26_entries() {
        assert_eq!(resnet50_configs(1).unwrap().len(), 26);
    }

    #[test]
    fn entries_are_unique_by_tuple_and_label() {
        let configs = resnet50_configs(1).unwrap();
        let mut keys: Vec<ConfigKey> =
            configs.iter().map(|c| ConfigKey::of(&c.params).unwrap()).collect();
        keys.sort_by_key(|k| (k.window, k.stride, k.rows, k.cols, k.cin, k.cout));
        keys.dedup();
        assert_eq!(keys.len(), 26, "duplicate parameter tuple in the suite");

        let mut labels: Vec<&str> = configs.iter().map(|c| c.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        assert_eq!(labels.len(), 26, "duplicate label in the suite");
    }

    #[test]
    fn contains_the_stem_convolution() {
        let configs = resnet50_configs(1).unwrap();
        let conv1 = &configs[0];
        assert_eq!(conv1.label, "conv1");
        let key = ConfigKey::of(&conv1.params).unwrap();
        assert_eq!(
            (key.window, key.stride, key.rows, key.cols, key.cin, key.cout),
            (7, 2, 224, 224, 3, 64)
        );
    }

    #[test]
    fn batch_is_the_only_difference_across_batch_sizes() {
        let b1 = resnet50_configs(1).unwrap();
        let b32 = resnet50_configs(32).unwrap();
        for (a, b) in b1.iter().zip(&b32) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.params.input.batch, 1);
            assert_eq!(b.params.input.batch, 32);
            let mut a_params = a.params;
            a_params.input.batch = 32;
            assert_eq!(a_params, b.params);
        }
    }

    #[test]
    fn conv_layer_counts_recover_the_network() {
        // 1 stem + 3 convs per unit + 1 projection per stage over (3,4,6,3)
        // units must collapse to the 26 distinct tuples.
        let total_convs = 1 + 4 * 1 + 3 * (3 + 4 + 6 + 3);
        assert_eq!(total_convs, 53);
        assert_eq!(resnet50_configs(1).unwrap().len(), 26);
    }
}
