//! Shape arithmetic shared by the kernels.

pub fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Row-major strides.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut out = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        out[i] = out[i + 1] * shape[i + 1];
    }
    out
}

/// Trailing-dimension broadcast of two shapes; size-1 extents expand.
pub fn broadcast_shape(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let da = if i < rank - a.len() { 1 } else { a[i - (rank - a.len())] };
        let db = if i < rank - b.len() { 1 } else { b[i - (rank - b.len())] };
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return None,
        };
    }
    Some(out)
}

/// True when `small` can be broadcast up to `big`.
pub fn broadcasts_to(small: &[usize], big: &[usize]) -> bool {
    small.len() <= big.len()
        && small
            .iter()
            .rev()
            .zip(big.iter().rev())
            .all(|(&s, &b)| s == b || s == 1)
}

/// Strides of `small` laid over the index space of `big`, with zero stride on
/// broadcast axes. Caller guarantees `broadcasts_to(small, big)`.
pub(crate) fn broadcast_strides(small: &[usize], big: &[usize]) -> Vec<usize> {
    let own = strides(small);
    let offset = big.len() - small.len();
    (0..big.len())
        .map(|i| {
            if i < offset || small[i - offset] == 1 {
                0
            } else {
                own[i - offset]
            }
        })
        .collect()
}

/// Visits every index of `big` in row-major order, yielding the matching flat
/// offset into a tensor broadcast with `strides`.
pub(crate) fn for_each_broadcast_offset(big: &[usize], strides: &[usize], mut f: impl FnMut(usize, usize)) {
    let total = numel(big);
    if total == 0 {
        return;
    }
    let rank = big.len();
    if rank == 0 {
        f(0, 0);
        return;
    }
    // Innermost axis handled as a tight loop.
    let inner = big[rank - 1];
    let inner_stride = strides[rank - 1];
    let mut index = vec![0usize; rank.saturating_sub(1)];
    let mut base = 0usize;
    let mut flat = 0usize;
    loop {
        for j in 0..inner {
            f(flat + j, base + j * inner_stride);
        }
        flat += inner;
        if flat >= total {
            break;
        }
        // Odometer increment over the outer axes.
        let mut axis = rank - 1;
        loop {
            axis -= 1;
            index[axis] += 1;
            base += strides[axis];
            if index[axis] < big[axis] {
                break;
            }
            base -= strides[axis] * big[axis];
            index[axis] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadcast_rules() {
        assert_eq!(broadcast_shape(&[2, 3], &[3]), Some(vec![2, 3]));
        assert_eq!(broadcast_shape(&[4, 1, 3], &[2, 1]), Some(vec![4, 2, 3]));
        assert_eq!(broadcast_shape(&[], &[5]), Some(vec![5]));
        assert_eq!(broadcast_shape(&[2], &[3]), None);
        assert!(broadcasts_to(&[1, 3, 1], &[2, 3, 4]));
        assert!(!broadcasts_to(&[2, 3], &[3]));
    }

    #[test]
    fn offsets_follow_broadcast() {
        let big = [2, 3];
        let st = broadcast_strides(&[3], &big);
        let mut seen = vec![];
        for_each_broadcast_offset(&big, &st, |i, o| seen.push((i, o)));
        assert_eq!(seen, vec![(0, 0), (1, 1), (2, 2), (3, 0), (4, 1), (5, 2)]);
    }
}
