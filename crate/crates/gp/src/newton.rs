//! Newton systems of the form `H = blockdiag(B_1..B_c) + U U^T`.
//!
//! Log-sum-exp Hessians only touch their own support, so variables split
//! into components by union-find over block supports. Rank-one barrier
//! terms that stay inside one component are folded into its block; the
//! rest become columns of `U` and are handled with the Woodbury identity.
//! A dense Cholesky is used when `U` is wide. When rounding spoils the
//! Woodbury solve, the structured factor preconditions conjugate gradients,
//! and the dense path is the last resort.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};

use crate::convex::{ExpPosy, Ineq, LogConvexFn, LseEval};

const CG_MAX_ITER: usize = 80;

/// Variable partition derived from a fixed list of functions.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    n: usize,
    comps: Vec<Vec<usize>>,
    comp_of: Vec<usize>,
    local_of: Vec<usize>,
    /// `[fn][block] -> (component, block-local -> component-local)`
    block_maps: Vec<Vec<(usize, Vec<usize>)>>,
    /// `[fn] -> Some(component)` when the whole support fits in one.
    fn_comp: Vec<Option<usize>>,
    /// `[fn] -> component-local index of each support variable`
    fn_local: Vec<Vec<usize>>,
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

impl Layout {
    /// Function 0 is the objective, function `k + 1` is `ineqs[k]`.
    pub(crate) fn new(n: usize, objective: &LogConvexFn, ineqs: &[Ineq]) -> Self {
        let mut parent: Vec<usize> = (0..n).collect();
        let mut join = |s: &[usize]| {
            for w in s.windows(2) {
                let (a, c) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                if a != c {
                    parent[a.max(c)] = a.min(c);
                }
            }
        };
        let log_fns = std::iter::once(objective).chain(ineqs.iter().filter_map(|c| match c {
            Ineq::Log(f) => Some(f),
            Ineq::Exp(_) => None,
        }));
        for f in log_fns {
            for (b, _) in f.blocks() {
                join(b.support());
            }
        }
        for c in ineqs {
            if let Ineq::Exp(p) = c {
                for e in p.term_exponents() {
                    let vs: Vec<usize> = e.iter().map(|(v, _)| *v).collect();
                    join(&vs);
                }
            }
        }
        let mut root_comp = vec![usize::MAX; n];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        let mut comp_of = vec![0; n];
        let mut local_of = vec![0; n];
        for v in 0..n {
            let r = find(&mut parent, v);
            if root_comp[r] == usize::MAX {
                root_comp[r] = comps.len();
                comps.push(Vec::new());
            }
            let c = root_comp[r];
            comp_of[v] = c;
            local_of[v] = comps[c].len();
            comps[c].push(v);
        }
        let fns: Vec<Option<&LogConvexFn>> = std::iter::once(Some(objective))
            .chain(ineqs.iter().map(|c| match c {
                Ineq::Log(f) => Some(f),
                Ineq::Exp(_) => None,
            }))
            .collect();
        let supports: Vec<&[usize]> =
            std::iter::once(objective.support()).chain(ineqs.iter().map(Ineq::support)).collect();
        let block_maps = fns
            .iter()
            .map(|f| {
                f.map_or(&[][..], |f| f.blocks())
                    .iter()
                    .map(|(b, _)| {
                        let s = b.support();
                        let c = s.first().map_or(0, |&v| comp_of[v]);
                        (c, s.iter().map(|&v| local_of[v]).collect())
                    })
                    .collect()
            })
            .collect();
        let fn_comp = supports
            .iter()
            .map(|s| {
                let c = *s.first().map(|v| &comp_of[*v])?;
                s.iter().all(|&v| comp_of[v] == c).then_some(c)
            })
            .collect();
        let fn_local = supports.iter().map(|s| s.iter().map(|&v| local_of[v]).collect()).collect();
        Self { n, comps, comp_of, local_of, block_maps, fn_comp, fn_local }
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }
}

/// Hessian under construction.
pub(crate) struct Assembly<'a> {
    layout: &'a Layout,
    blocks: Vec<Vec<f64>>,
    low_rank: Vec<(Vec<usize>, Vec<f64>)>,
}

impl<'a> Assembly<'a> {
    pub(crate) fn new(layout: &'a Layout) -> Self {
        let blocks = layout.comps.iter().map(|c| vec![0.0; c.len() * c.len()]).collect();
        Self { layout, blocks, low_rank: Vec::new() }
    }

    pub(crate) fn add_diag(&mut self, v: usize, val: f64) {
        let c = self.layout.comp_of[v];
        let m = self.layout.comps[c].len();
        let l = self.layout.local_of[v];
        self.blocks[c][l * m + l] += val;
    }

    /// Adds `scale * sum_k w_k hess(lse_k)` for function number `fi`.
    pub(crate) fn add_curvature(&mut self, fi: usize, f: &LogConvexFn, evals: &[LseEval], scale: f64) {
        for (k, ((b, w), ev)) in f.blocks().iter().zip(evals).enumerate() {
            let (c, local) = &self.layout.block_maps[fi][k];
            let m = self.layout.comps[*c].len();
            b.add_hessian(ev, scale * w, local, &mut self.blocks[*c], m);
        }
    }

    /// Adds `scale * sum_t v_t a_t a_t^T` for an exponential-form constraint
    /// with per-term values `v_t`.
    pub(crate) fn add_exp_curvature(&mut self, p: &ExpPosy, term_values: &[f64], scale: f64) {
        for (e, &tv) in p.term_exponents().zip(term_values) {
            let w = scale * tv;
            for &(v1, a1) in e {
                let c = self.layout.comp_of[v1];
                let m = self.layout.comps[c].len();
                let r = self.layout.local_of[v1] * m;
                for &(v2, a2) in e {
                    self.blocks[c][r + self.layout.local_of[v2]] += w * a1 * a2;
                }
            }
        }
    }

    /// Adds `u u^T` where `u` lives on `support`, the support of function `fi`.
    pub(crate) fn add_outer(&mut self, fi: usize, support: &[usize], u: &[f64]) {
        match self.layout.fn_comp[fi] {
            Some(c) => {
                let m = self.layout.comps[c].len();
                let local = &self.layout.fn_local[fi];
                let blk = &mut self.blocks[c];
                for (a, &ua) in u.iter().enumerate() {
                    if ua == 0.0 {
                        continue;
                    }
                    let r = local[a] * m;
                    for (b, &ub) in u.iter().enumerate() {
                        blk[r + local[b]] += ua * ub;
                    }
                }
            }
            None => self.low_rank.push((support.to_vec(), u.to_vec())),
        }
    }

    /// Adds `a a^T` for a sparse vector `a` spanning any variables.
    pub(crate) fn add_sparse_outer(&mut self, a: &[(usize, f64)]) {
        self.low_rank.push((a.iter().map(|(v, _)| *v).collect(), a.iter().map(|(_, x)| *x).collect()));
    }

    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.n];
        for (c, vars) in self.layout.comps.iter().enumerate() {
            let m = vars.len();
            let blk = &self.blocks[c];
            for (a, &va) in vars.iter().enumerate() {
                let row = &blk[a * m..(a + 1) * m];
                out[va] += row.iter().zip(vars).map(|(h, &vb)| h * x[vb]).sum::<f64>();
            }
        }
        for (s, u) in &self.low_rank {
            let d: f64 = s.iter().zip(u).map(|(&v, ui)| ui * x[v]).sum();
            for (&v, ui) in s.iter().zip(u) {
                out[v] += ui * d;
            }
        }
        out
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.layout.n;
        let mut h = DMatrix::zeros(n, n);
        for (c, vars) in self.layout.comps.iter().enumerate() {
            let m = vars.len();
            for (a, &va) in vars.iter().enumerate() {
                for (b, &vb) in vars.iter().enumerate() {
                    h[(va, vb)] += self.blocks[c][a * m + b];
                }
            }
        }
        for (s, u) in &self.low_rank {
            for (a, &va) in s.iter().enumerate() {
                for (b, &vb) in s.iter().enumerate() {
                    h[(va, vb)] += u[a] * u[b];
                }
            }
        }
        h
    }

    /// Factorises the assembled matrix.
    pub(crate) fn factor(self) -> Option<Factor<'a>> {
        let n = self.layout.n;
        let r = self.low_rank.len();
        let kind = if n <= 8 || 2 * r > n || r > 400 {
            Kind::Dense(dense_cholesky(self.dense())?)
        } else {
            match self.structured(r) {
                Some(k) => k,
                None => Kind::Dense(dense_cholesky(self.dense())?),
            }
        };
        Some(Factor { asm: self, kind })
    }

    fn structured(&self, r: usize) -> Option<Kind> {
        let n = self.layout.n;
        let mut u = DMatrix::zeros(n, r);
        for (k, (s, vals)) in self.low_rank.iter().enumerate() {
            for (&v, &x) in s.iter().zip(vals) {
                u[(v, k)] = x;
            }
        }
        // A component without curvature of its own (an epigraph variable,
        // say) is singular. It is shifted by the diagonal of U U^T and the
        // shift is removed again through extra columns with negative sign.
        let mut chols = Vec::with_capacity(self.layout.comps.len());
        let mut shifted: Vec<(usize, f64)> = Vec::new();
        for (c, vars) in self.layout.comps.iter().enumerate() {
            let m = vars.len();
            let blk = DMatrix::from_row_slice(m, m, &self.blocks[c]);
            let diag_max = (0..m).map(|a| blk[(a, a)].abs()).fold(0.0, f64::max);
            let low_diag: Vec<f64> = vars.iter().map(|&v| u.row(v).norm_squared()).collect();
            let weak = (0..m).any(|a| blk[(a, a)] <= 1e-12 * low_diag[a]);
            if weak && m <= 8 {
                let mut b = blk;
                for (a, &v) in vars.iter().enumerate() {
                    let d = low_diag[a].max(diag_max).max(1e-300);
                    b[(a, a)] += d;
                    shifted.push((v, d));
                }
                chols.push(dense_cholesky(b)?);
            } else {
                chols.push(dense_cholesky(blk)?);
            }
        }
        let q = r + shifted.len();
        if q == 0 {
            return Some(Kind::Block { chols, z: DMatrix::zeros(0, 0), cap: None });
        }
        let mut w = u.resize_horizontally(q, 0.0);
        for (k, &(v, _)) in shifted.iter().enumerate() {
            w[(v, r + k)] = 1.0;
        }
        let mut z = DMatrix::zeros(n, q);
        for (c, vars) in self.layout.comps.iter().enumerate() {
            let mut rows = DMatrix::zeros(vars.len(), q);
            let mut any = false;
            for (a, &v) in vars.iter().enumerate() {
                for k in 0..q {
                    rows[(a, k)] = w[(v, k)];
                    any |= w[(v, k)] != 0.0;
                }
            }
            if !any {
                continue;
            }
            chols[c].solve_mut(&mut rows);
            for (a, &v) in vars.iter().enumerate() {
                for k in 0..q {
                    z[(v, k)] = rows[(a, k)];
                }
            }
        }
        let mut capm = w.transpose() * &z;
        for k in 0..r {
            capm[(k, k)] += 1.0;
        }
        for (k, &(_, d)) in shifted.iter().enumerate() {
            capm[(r + k, r + k)] -= 1.0 / d;
        }
        let cap = capm.lu();
        if !cap.is_invertible() {
            return None;
        }
        Some(Kind::Block { chols, z, cap: Some((w, cap)) })
    }
}

fn dense_cholesky(mut h: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let n = h.nrows();
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
    if let Some(c) = Cholesky::new(h.clone()) {
        return Some(c);
    }
    let mut reg = 1e-14 * scale;
    for _ in 0..8 {
        for i in 0..n {
            h[(i, i)] += reg;
        }
        if let Some(c) = Cholesky::new(h.clone()) {
            return Some(c);
        }
        reg *= 100.0;
    }
    None
}

enum Kind {
    Block {
        chols: Vec<Cholesky<f64, Dyn>>,
        z: DMatrix<f64>,
        cap: Option<(DMatrix<f64>, LU<f64, Dyn, Dyn>)>,
    },
    Dense(Cholesky<f64, Dyn>),
}

/// Factorised Newton matrix.
pub(crate) struct Factor<'a> {
    asm: Assembly<'a>,
    kind: Kind,
}

impl Factor<'_> {
    fn raw_solve(&self, rhs: &[f64]) -> Vec<f64> {
        match &self.kind {
            Kind::Dense(ch) => ch.solve(&DVector::from_column_slice(rhs)).as_slice().to_vec(),
            Kind::Block { chols, z, cap } => {
                let mut w = vec![0.0; rhs.len()];
                for (c, vars) in self.asm.layout.comps.iter().enumerate() {
                    let mut b = DVector::from_iterator(vars.len(), vars.iter().map(|&v| rhs[v]));
                    chols[c].solve_mut(&mut b);
                    for (a, &v) in vars.iter().enumerate() {
                        w[v] = b[a];
                    }
                }
                if let Some((u, capc)) = cap {
                    let t = u.transpose() * DVector::from_column_slice(&w);
                    let corr = z * capc.solve(&t).unwrap_or_else(|| DVector::zeros(t.len()));
                    for (wi, ci) in w.iter_mut().zip(corr.iter()) {
                        *wi -= ci;
                    }
                }
                w
            }
        }
    }

    fn residual(&self, x: &[f64], rhs: &[f64]) -> (Vec<f64>, f64) {
        let hx = self.asm.matvec(x);
        let res: Vec<f64> = rhs.iter().zip(&hx).map(|(b, h)| b - h).collect();
        let nr = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let nb = rhs.iter().chain(&hx).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        (res, nr / nb)
    }

    /// Solves `H x = rhs`. A structured factor that loses accuracy is used
    /// as a preconditioner for conjugate gradients; only if that also
    /// fails is the matrix factorised densely.
    pub(crate) fn solve(&mut self, rhs: &[f64]) -> Vec<f64> {
        let mut x = self.raw_solve(rhs);
        let (mut r, rel) = self.residual(&x, rhs);
        if rel <= 1e-12 || matches!(self.kind, Kind::Dense(_)) {
            return x;
        }
        let nb = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut z = self.raw_solve(&r);
        let mut d = z.clone();
        let mut rz = dot(&r, &z);
        for _ in 0..CG_MAX_ITER {
            let hd = self.asm.matvec(&d);
            let dhd = dot(&d, &hd);
            if !(dhd > 0.0 && rz.is_finite()) {
                break;
            }
            let alpha = rz / dhd;
            x.iter_mut().zip(&d).for_each(|(a, b)| *a += alpha * b);
            r.iter_mut().zip(&hd).for_each(|(a, b)| *a -= alpha * b);
            if r.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= 1e-11 * nb {
                return x;
            }
            z = self.raw_solve(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            d.iter_mut().zip(&z).for_each(|(a, b)| *a = b + beta * *a);
        }
        let (_, rel) = self.residual(&x, rhs);
        if rel <= 1e-8 {
            return x;
        }
        match dense_cholesky(self.asm.dense()) {
            Some(ch) => {
                self.kind = Kind::Dense(ch);
                self.solve(rhs)
            }
            None => x,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{GenPosynomial, Monomial, Posynomial};

    fn lse(vars: &[usize]) -> LogConvexFn {
        let terms = vars
            .iter()
            .enumerate()
            .map(|(k, &v)| Monomial::new(1.0 + k as f64, [(v, 1.0), (vars[0], -0.5)]).unwrap())
            .chain(std::iter::once(Monomial::constant(0.3).unwrap()))
            .collect();
        LogConvexFn::from_gen(&GenPosynomial::from(Posynomial::new(terms).unwrap()))
    }

    #[test]
    fn structured_matches_dense() {
        let n = 12;
        let fns = [lse(&[0, 1, 2]), lse(&[3, 4]), lse(&[5, 6, 7, 8]), lse(&[9, 10])];
        let obj = LogConvexFn::affine(0.0, vec![]);
        let ineqs: Vec<Ineq> = fns.iter().cloned().map(Ineq::Log).collect();
        let layout = Layout::new(n, &obj, &ineqs);
        assert_eq!(layout.comps.len(), 5);
        let y: Vec<f64> = (0..n).map(|k| 0.1 * k as f64 - 0.4).collect();
        let mut asm = Assembly::new(&layout);
        for (fi, f) in fns.iter().enumerate() {
            let (_, _, ev) = f.eval(&y);
            asm.add_curvature(fi + 1, f, &ev, 1.5);
        }
        for v in 0..n {
            asm.add_diag(v, 0.2 + 0.01 * v as f64);
        }
        let wide = [lse(&[0, 3, 5, 9]), lse(&[1, 4, 11])];
        for (k, f) in wide.iter().enumerate() {
            let u: Vec<f64> = (0..f.support().len()).map(|a| 0.7 + a as f64 + k as f64).collect();
            asm.low_rank.push((f.support().to_vec(), u));
        }
        let dense = asm.dense();
        let rhs: Vec<f64> = (0..n).map(|k| (k as f64).sin()).collect();
        let mut fac = asm.factor().unwrap();
        assert!(matches!(fac.kind, Kind::Block { .. }));
        let x = fac.solve(&rhs);
        let hx = dense * DVector::from_column_slice(&x);
        for k in 0..n {
            assert!((hx[k] - rhs[k]).abs() < 1e-10, "{k}: {} vs {}", hx[k], rhs[k]);
        }
    }

    #[test]
    fn uncurved_variable_is_handled_structurally() {
        let n = 13;
        let fns = [lse(&[0, 1, 2]), lse(&[3, 4]), lse(&[5, 6, 7, 8]), lse(&[9, 10, 11])];
        let obj = LogConvexFn::affine(0.0, vec![]);
        let ineqs: Vec<Ineq> = fns.iter().cloned().map(Ineq::Log).collect();
        let layout = Layout::new(n, &obj, &ineqs);
        let y: Vec<f64> = (0..n).map(|k| 0.05 * k as f64).collect();
        let mut asm = Assembly::new(&layout);
        for (fi, f) in fns.iter().enumerate() {
            let (_, _, ev) = f.eval(&y);
            asm.add_curvature(fi + 1, f, &ev, 1.0);
        }
        for v in 0..12 {
            asm.add_diag(v, 0.1);
        }
        for k in 0..4 {
            let s = vec![3 * k, 3 * k + 1, 12];
            asm.low_rank.push((s, vec![0.5, -0.2 + k as f64, 1.3]));
        }
        let dense = asm.dense();
        let rhs: Vec<f64> = (0..n).map(|k| (k as f64).cos()).collect();
        let fac = asm.factor().unwrap();
        assert!(matches!(fac.kind, Kind::Block { .. }));
        let x = fac.raw_solve(&rhs);
        let hx = dense * DVector::from_column_slice(&x);
        for k in 0..n {
            assert!((hx[k] - rhs[k]).abs() < 1e-9, "{k}: {} vs {}", hx[k], rhs[k]);
        }
    }
}
