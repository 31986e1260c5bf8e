//! Convolution kernels (im2col + GEMM) on `[N, C, H, W]` buffers.
//!
//! One-dimensional convolutions run through the same code with `H = 1`.
//! The three kernels here are mutually adjoint: the gradient of each with
//! respect to either operand is expressed with one of the other two, which is
//! what makes arbitrary-order differentiation of convolutions possible.

/// Kernel geometry shared by a convolution and its adjoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ConvGeom {
    pub kernel: [usize; 2],
    pub stride: [usize; 2],
    pub pad_begin: [usize; 2],
    pub pad_end: [usize; 2],
}

impl ConvGeom {
    pub fn new2d(kernel: [usize; 2], stride: [usize; 2], pad: [usize; 2]) -> Self {
        ConvGeom {
            kernel,
            stride,
            pad_begin: pad,
            pad_end: pad,
        }
    }

    /// A 1-D geometry embedded as `1 x k`.
    pub fn new1d(kernel: usize, stride: usize, pad_begin: usize, pad_end: usize) -> Self {
        ConvGeom {
            kernel: [1, kernel],
            stride: [1, stride],
            pad_begin: [0, pad_begin],
            pad_end: [0, pad_end],
        }
    }

    /// "Same" padding for stride 1: the extra element goes at the end, as Keras does.
    pub fn same1d(kernel: usize) -> Self {
        let total = kernel - 1;
        Self::new1d(kernel, 1, total / 2, total - total / 2)
    }

    /// Output extents of the forward convolution, or `None` if the padded input
    /// is smaller than the kernel.
    pub fn out_extent(&self, input: [usize; 2]) -> Option<[usize; 2]> {
        let mut out = [0; 2];
        for d in 0..2 {
            let padded = input[d] + self.pad_begin[d] + self.pad_end[d];
            if padded < self.kernel[d] || self.stride[d] == 0 {
                return None;
            }
            out[d] = (padded - self.kernel[d]) / self.stride[d] + 1;
        }
        Some(out)
    }

    /// Largest input extents whose forward output is `out`; this is the
    /// output size of the transposed convolution.
    pub fn transposed_extent(&self, out: [usize; 2]) -> Option<[usize; 2]> {
        let mut input = [0; 2];
        for d in 0..2 {
            if out[d] == 0 {
                return None;
            }
            let padded = (out[d] - 1) * self.stride[d] + self.kernel[d];
            let pads = self.pad_begin[d] + self.pad_end[d];
            if padded <= pads {
                return None;
            }
            input[d] = padded - pads;
        }
        Some(input)
    }

    fn patch_len(&self) -> usize {
        self.kernel[0] * self.kernel[1]
    }
}

/// Sizes of one convolution instance: input `[n, c, h, w]`, weights
/// `[o, c, kh, kw]`, output `[n, o, ho, wo]`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ConvDims {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub o: usize,
    pub ho: usize,
    pub wo: usize,
}

impl ConvDims {
    fn rows(&self, g: &ConvGeom) -> usize {
        self.c * g.patch_len()
    }

    fn positions(&self) -> usize {
        self.ho * self.wo
    }

    /// Samples per im2col chunk, bounding the column buffer to ~16 MiB.
    fn chunk(&self, g: &ConvGeom) -> usize {
        const LIMIT: usize = 1 << 22;
        (LIMIT / (self.rows(g) * self.positions()).max(1)).clamp(1, self.n.max(1))
    }
}

/// `C = A·B + beta·C` with arbitrary element strides.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f32],
    a_strides: (usize, usize),
    b: &[f32],
    b_strides: (usize, usize),
    beta: f32,
    c: &mut [f32],
    c_strides: (usize, usize),
) {
    if m == 0 || n == 0 {
        return;
    }
    if k > 0 {
        assert!((m - 1) * a_strides.0 + (k - 1) * a_strides.1 < a.len());
        assert!((k - 1) * b_strides.0 + (n - 1) * b_strides.1 < b.len());
    }
    assert!((m - 1) * c_strides.0 + (n - 1) * c_strides.1 < c.len());
    // SAFETY: every index touched by sgemm is bounded by the asserts above.
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0 as isize,
            a_strides.1 as isize,
            b.as_ptr(),
            b_strides.0 as isize,
            b_strides.1 as isize,
            beta,
            c.as_mut_ptr(),
            c_strides.0 as isize,
            c_strides.1 as isize,
        );
    }
}

/// Writes the patches of one sample into columns `col0..col0+ho*wo` of a
/// `[c*kh*kw, ld]` matrix.
fn im2col(x: &[f32], d: &ConvDims, g: &ConvGeom, cols: &mut [f32], ld: usize, col0: usize) {
    let [kh, kw] = g.kernel;
    let [sh, sw] = g.stride;
    for ci in 0..d.c {
        let plane = &x[ci * d.h * d.w..(ci + 1) * d.h * d.w];
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ci * kh + ki) * kw + kj;
                let dst = &mut cols[row * ld + col0..row * ld + col0 + d.ho * d.wo];
                for oh in 0..d.ho {
                    let ih = (oh * sh + ki) as isize - g.pad_begin[0] as isize;
                    let out_row = &mut dst[oh * d.wo..(oh + 1) * d.wo];
                    if ih < 0 || ih as usize >= d.h {
                        out_row.fill(0.0);
                        continue;
                    }
                    let src = &plane[ih as usize * d.w..(ih as usize + 1) * d.w];
                    for (ow, v) in out_row.iter_mut().enumerate() {
                        let iw = (ow * sw + kj) as isize - g.pad_begin[1] as isize;
                        *v = if iw < 0 || iw as usize >= d.w { 0.0 } else { src[iw as usize] };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulates columns back into one sample.
fn col2im(cols: &[f32], d: &ConvDims, g: &ConvGeom, ld: usize, col0: usize, x: &mut [f32]) {
    let [kh, kw] = g.kernel;
    let [sh, sw] = g.stride;
    for ci in 0..d.c {
        let plane = &mut x[ci * d.h * d.w..(ci + 1) * d.h * d.w];
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ci * kh + ki) * kw + kj;
                let src = &cols[row * ld + col0..row * ld + col0 + d.ho * d.wo];
                for oh in 0..d.ho {
                    let ih = (oh * sh + ki) as isize - g.pad_begin[0] as isize;
                    if ih < 0 || ih as usize >= d.h {
                        continue;
                    }
                    let dst = &mut plane[ih as usize * d.w..(ih as usize + 1) * d.w];
                    for (ow, v) in src[oh * d.wo..(oh + 1) * d.wo].iter().enumerate() {
                        let iw = (ow * sw + kj) as isize - g.pad_begin[1] as isize;
                        if iw >= 0 && (iw as usize) < d.w {
                            dst[iw as usize] += *v;
                        }
                    }
                }
            }
        }
    }
}

/// `y[n, o] = Σ_c w[o, c] ⋆ x[n, c]`.
pub(crate) fn conv_forward(x: &[f32], w: &[f32], d: &ConvDims, g: &ConvGeom) -> Vec<f32> {
    let rows = d.rows(g);
    let p = d.positions();
    let mut out = vec![0.0; d.n * d.o * p];
    let chunk = d.chunk(g);
    let mut cols = vec![0.0; rows * chunk * p];
    let mut prod = vec![0.0; d.o * chunk * p];
    for n0 in (0..d.n).step_by(chunk) {
        let nc = chunk.min(d.n - n0);
        let ld = nc * p;
        for s in 0..nc {
            let sample = &x[(n0 + s) * d.c * d.h * d.w..(n0 + s + 1) * d.c * d.h * d.w];
            im2col(sample, d, g, &mut cols, ld, s * p);
        }
        gemm(d.o, rows, ld, w, (rows, 1), &cols, (ld, 1), 0.0, &mut prod, (ld, 1));
        for s in 0..nc {
            for o in 0..d.o {
                let dst = ((n0 + s) * d.o + o) * p;
                out[dst..dst + p].copy_from_slice(&prod[o * ld + s * p..o * ld + (s + 1) * p]);
            }
        }
    }
    out
}

/// Adjoint of [`conv_forward`] in `x`: maps `[n, o, ho, wo]` back to `[n, c, h, w]`.
pub(crate) fn conv_transpose(gy: &[f32], w: &[f32], d: &ConvDims, g: &ConvGeom) -> Vec<f32> {
    let rows = d.rows(g);
    let p = d.positions();
    let mut out = vec![0.0; d.n * d.c * d.h * d.w];
    let chunk = d.chunk(g);
    let mut cols = vec![0.0; rows * chunk * p];
    let mut gathered = vec![0.0; d.o * chunk * p];
    for n0 in (0..d.n).step_by(chunk) {
        let nc = chunk.min(d.n - n0);
        let ld = nc * p;
        for s in 0..nc {
            for o in 0..d.o {
                let src = ((n0 + s) * d.o + o) * p;
                gathered[o * ld + s * p..o * ld + (s + 1) * p].copy_from_slice(&gy[src..src + p]);
            }
        }
        // cols = wᵀ · gathered
        gemm(rows, d.o, ld, w, (1, rows), &gathered, (ld, 1), 0.0, &mut cols, (ld, 1));
        for s in 0..nc {
            let sample = &mut out[(n0 + s) * d.c * d.h * d.w..(n0 + s + 1) * d.c * d.h * d.w];
            col2im(&cols, d, g, ld, s * p, sample);
        }
    }
    out
}

/// Adjoint of [`conv_forward`] in `w`: `dw[o, c] = Σ_n gy[n, o] ⋆ x[n, c]`.
pub(crate) fn conv_weight_grad(x: &[f32], gy: &[f32], d: &ConvDims, g: &ConvGeom) -> Vec<f32> {
    let rows = d.rows(g);
    let p = d.positions();
    let mut dw = vec![0.0; d.o * rows];
    let chunk = d.chunk(g);
    let mut cols = vec![0.0; rows * chunk * p];
    let mut gathered = vec![0.0; d.o * chunk * p];
    for n0 in (0..d.n).step_by(chunk) {
        let nc = chunk.min(d.n - n0);
        let ld = nc * p;
        for s in 0..nc {
            let sample = &x[(n0 + s) * d.c * d.h * d.w..(n0 + s + 1) * d.c * d.h * d.w];
            im2col(sample, d, g, &mut cols, ld, s * p);
            for o in 0..d.o {
                let src = ((n0 + s) * d.o + o) * p;
                gathered[o * ld + s * p..o * ld + (s + 1) * p].copy_from_slice(&gy[src..src + p]);
            }
        }
        // dw += gathered · colsᵀ
        gemm(d.o, ld, rows, &gathered, (ld, 1), &cols, (1, ld), 1.0, &mut dw, (rows, 1));
    }
    dw
}
