// SPDX-License-Identifier: Apache-2.0

/// 2×2 max pooling over a `[c][h][w]` grid; odd edges are truncated.
/// Returns the pooled grid and its `(h, w)`.
pub fn maxpool_spikes<T: Copy + PartialOrd>(
    grid: &[T],
    channels: usize,
    height: usize,
    width: usize,
) -> (Vec<T>, usize, usize) {
    assert_eq!(grid.len(), channels * height * width, "grid shape");
    let (ho, wo) = (height / 2, width / 2);
    let mut out = Vec::with_capacity(channels * ho * wo);
    for c in 0..channels {
        let plane = &grid[c * height * width..(c + 1) * height * width];
        for y in 0..ho {
            let (r0, r1) = (2 * y * width, (2 * y + 1) * width);
            for x in 0..wo {
                let mut m = plane[r0 + 2 * x];
                for v in [plane[r0 + 2 * x + 1], plane[r1 + 2 * x], plane[r1 + 2 * x + 1]] {
                    if v > m {
                        m = v;
                    }
                }
                out.push(m);
            }
        }
    }
    (out, ho, wo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_and_single_spike() {
        let (out, h, w) = maxpool_spikes(&[0u8; 16], 1, 4, 4);
        assert_eq!((h, w), (2, 2));
        assert!(out.iter().all(|&v| v == 0));

        let mut g = [0u8; 16];
        g[4 + 3] = 1;
        let (out, _, _) = maxpool_spikes(&g, 1, 4, 4);
        assert_eq!(out, vec![0, 1, 0, 0]);
    }

    #[test]
    fn odd_edges_truncated() {
        let g: Vec<u32> = (0..15).collect();
        let (out, h, w) = maxpool_spikes(&g, 1, 3, 5);
        assert_eq!((h, w), (1, 2));
        assert_eq!(out, vec![6, 8]);
    }
}
