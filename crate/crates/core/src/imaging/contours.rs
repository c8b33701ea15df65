use serde::{Deserialize, Serialize};

use super::BinaryImage;

/// Contours shorter than this are treated as single-pixel noise.
pub const DEFAULT_MIN_PERIMETER: usize = 4;

/// One closed border traced through 8-connected foreground pixels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contour {
    /// `(x, y)` pixel coordinates in tracing order.
    pub points: Vec<(usize, usize)>,
    /// Outer border of a component, as opposed to the border of a hole.
    pub is_external: bool,
}

impl Contour {
    pub fn perimeter(&self) -> usize {
        self.points.len()
    }
}

/// Traces every outer and hole border with Suzuki-Abe raster-scan border
/// following (8-connected foreground, 4-connected background).
pub fn trace_borders(edges: &BinaryImage) -> Vec<Contour> {
    let (w, h) = (edges.width(), edges.height());
    if w == 0 || h == 0 {
        return Vec::new();
    }
    // one-pixel frame of background around the image
    let pw = w + 2;
    let ph = h + 2;
    let mut f = vec![0i32; pw * ph];
    for (x, y) in edges.foreground() {
        f[(y + 1) * pw + x + 1] = 1;
    }

    // clockwise on screen, starting east: E, SE, S, SW, W, NW, N, NE
    let stride = pw as isize;
    let offsets: [isize; 8] = [
        1,
        stride + 1,
        stride,
        stride - 1,
        -1,
        -stride - 1,
        -stride,
        -stride + 1,
    ];
    const EAST: usize = 0;
    const WEST: usize = 4;
    let step = |i: usize, d: usize| (i as isize + offsets[d]) as usize;
    let dir_to = |from: usize, to: usize| {
        let diff = to as isize - from as isize;
        offsets
            .iter()
            .position(|&o| o == diff)
            .expect("border pixels are 8-adjacent")
    };
    let coords = |i: usize| (i % pw - 1, i / pw - 1);

    let mut contours = Vec::new();
    let mut nbd = 1i32;
    for row in 1..ph - 1 {
        for col in 1..pw - 1 {
            let start = row * pw + col;
            let v = f[start];
            if v == 0 {
                continue;
            }
            let (search_from, is_external) = if v == 1 && f[start - 1] == 0 {
                (WEST, true)
            } else if v >= 1 && f[start + 1] == 0 {
                (EAST, false)
            } else {
                continue;
            };
            nbd += 1;

            let mut points = vec![coords(start)];
            let first = (0..8)
                .map(|k| (search_from + k) % 8)
                .find(|&d| f[step(start, d)] != 0);
            match first {
                None => f[start] = -nbd,
                Some(d1) => {
                    let i1 = step(start, d1);
                    let mut prev = i1;
                    let mut cur = start;
                    loop {
                        // counter-clockwise from the element after `prev`
                        let back = dir_to(cur, prev);
                        let mut east_is_background = false;
                        let mut next = prev;
                        for k in 1..=8 {
                            let d = (back + 8 - k) % 8;
                            let n = step(cur, d);
                            if f[n] != 0 {
                                next = n;
                                break;
                            }
                            if d == EAST {
                                east_is_background = true;
                            }
                        }
                        if east_is_background {
                            f[cur] = -nbd;
                        } else if f[cur] == 1 {
                            f[cur] = nbd;
                        }
                        if next == start && cur == i1 {
                            break;
                        }
                        prev = cur;
                        cur = next;
                        points.push(coords(cur));
                    }
                }
            }
            contours.push(Contour { points, is_external });
        }
    }
    contours
}

/// External contours only: exactly one per 8-connected foreground component.
pub fn find_contours(edges: &BinaryImage) -> Vec<Contour> {
    trace_borders(edges)
        .into_iter()
        .filter(|c| c.is_external)
        .collect()
}

/// Number of contours whose point count reaches `min_perimeter`.
pub fn count_sunspots(contours: &[Contour], min_perimeter: usize) -> usize {
    contours
        .iter()
        .filter(|c| c.perimeter() >= min_perimeter)
        .count()
}
