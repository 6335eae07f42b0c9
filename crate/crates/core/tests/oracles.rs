//! Independent reference computations compared against the library.

use std::collections::HashSet;

use aqft_core::corr::{fuse, random_correspondence, Correspondence};
use aqft_core::dbl::{gamma_closure, SquareId};
use aqft_core::l2::{self, StandardForm};
use aqft_core::mink::{MinkCategory, Spacetime};
use aqft_core::nets::{
    build_spin_chain_net, spin_chain_hom, GreenSign, KgLattice, KgLatticeConfig, RMatrix, RVector, SpinChainConfig,
};
use aqft_core::numkit::{self, c, kron, CMatrix};
use aqft_core::vna::{AlgElement, AlgebraShape, Hom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rank by Gaussian elimination with complete pivoting.
fn rank(m: &CMatrix, tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let cutoff = tol * a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let mut r = 0;
    while r < rows.min(cols) {
        let (mut pi, mut pj, mut best) = (r, r, 0.0);
        for j in r..cols {
            for i in r..rows {
                if a[(i, j)].norm() > best {
                    (pi, pj, best) = (i, j, a[(i, j)].norm());
                }
            }
        }
        if best <= cutoff {
            break;
        }
        a.swap_rows(r, pi);
        a.swap_columns(r, pj);
        for i in r + 1..rows {
            let f = a[(i, r)] / a[(r, r)];
            for j in r..cols {
                let x = a[(r, j)];
                a[(i, j)] -= f * x;
            }
        }
        r += 1;
    }
    r
}

/// `dim (H ⊗ K) / span{ξb ⊗ η - ξ ⊗ bη}`, the algebraic balanced tensor product.
fn balanced_quotient_dim(h: &Correspondence, k: &Correspondence) -> usize {
    let b = h.right_alg();
    let (dh, dk) = (h.dim(), k.dim());
    let (ih, ik) = (CMatrix::identity(dh, dh), CMatrix::identity(dk, dk));
    let units = b.basis();
    let mut rel = CMatrix::zeros(dh * dk, dh * dk * units.len());
    for (m, e) in units.iter().enumerate() {
        let r = kron(&h.right_matrix(e), &ik) - kron(&ih, &k.left_matrix(e));
        rel.view_mut((0, m * dh * dk), (dh * dk, dh * dk)).copy_from(&r);
    }
    dh * dk - rank(&rel, 1e-9)
}

#[test]
fn fusion_dimension_matches_balanced_quotient() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let outer = [AlgebraShape::new(vec![1]).unwrap(), AlgebraShape::new(vec![2]).unwrap(), AlgebraShape::new(vec![2, 1]).unwrap()];
    let middle = [AlgebraShape::new(vec![2]).unwrap(), AlgebraShape::new(vec![2, 1]).unwrap()];
    for k in 0..40 {
        let b = &middle[k % 2];
        let a = &outer[rng.gen_range(0..3)];
        let cc = &outer[rng.gen_range(0..3)];
        let h = random_correspondence(a, b, 2, &mut rng).unwrap();
        let kk = random_correspondence(b, cc, 2, &mut rng).unwrap();
        let fused = fuse(&h, &kk, 1e-9).unwrap();
        assert_eq!(fused.dim(), balanced_quotient_dim(&h, &kk), "instance {k}");
    }
}

#[test]
fn fusion_with_standard_form_has_the_module_dimension() {
    // L²(M₂) ⊠ L²(M₂) ≅ L²(M₂), and C² ⊗ C² over M₂ from both sides is one-dimensional.
    let m2 = AlgebraShape::matrix(2).unwrap();
    let l = Correspondence::identity(&m2);
    assert_eq!(balanced_quotient_dim(&l, &l), 4);
    assert_eq!(fuse(&l, &l, 1e-9).unwrap().dim(), 4);
}

/// `ρ(b) aΩ = (ab)Ω`, computed from the product in the algebra.
#[test]
fn right_action_matches_algebra_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for blocks in [vec![2], vec![2, 1], vec![3, 2, 1]] {
        let shape = AlgebraShape::new(blocks).unwrap();
        let sf = StandardForm::new(&shape);
        let rand_elem = |rng: &mut ChaCha8Rng| {
            let bl = shape.blocks().iter().map(|&n| numkit::random_matrix(n, n, rng)).collect();
            AlgElement::from_blocks(&shape, bl).unwrap()
        };
        for _ in 0..5 {
            let (a, b) = (rand_elem(&mut rng), rand_elem(&mut rng));
            let lhs = sf.right(&b) * sf.vector_of(&a);
            let rhs = sf.vector_of(&a.mul(&b));
            assert!((lhs - rhs).norm() < 1e-12);
            let lhs = sf.left(&b) * sf.vector_of(&a);
            assert!((lhs - sf.vector_of(&b.mul(&a))).norm() < 1e-12);
        }
    }
}

/// `⟨L²(φ)aΩ, L²(φ)bΩ⟩ = tr(φ(a)^* φ(b))` through the target trace.
#[test]
fn l2_map_inner_products_match_target_trace() {
    let net = build_spin_chain_net(SpinChainConfig { sites: 3, local_dim: 2 }).unwrap();
    for phi in net.arrows.iter().take(40) {
        let t = l2::l2_map(phi);
        let units = phi.source().basis();
        let sw = phi.source().weights()[0].sqrt();
        for (p, a) in units.iter().enumerate().step_by(3) {
            for (q, b) in units.iter().enumerate().step_by(5) {
                let lhs = t.column(p).dotc(&t.column(q)) * sw * sw;
                let rhs = phi.target().tr(&phi.apply(a).adjoint().mul(&phi.apply(b)));
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }
}

fn swap_gate(d: usize, factors: usize, k: usize) -> CMatrix {
    let mut swap = CMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            swap[(b * d + a, a * d + b)] = c(1.0, 0.0);
        }
    }
    let left = CMatrix::identity(d.pow(k as u32), d.pow(k as u32));
    let right = CMatrix::identity(d.pow((factors - k - 2) as u32), d.pow((factors - k - 2) as u32));
    kron(&kron(&left, &swap), &right)
}

/// The embedding `x -> 1 ⊗ x` followed by a network of adjacent swaps that
/// sorts the tensor factors into the target's site order.
fn swap_network_hom(m: &MinkCategory, d: usize, arrow_index: usize) -> Hom {
    let a = m.h_arrows[arrow_index];
    let us = m.regions[a.source].ordered_sites(&m.spacetime);
    let vs = m.regions[a.target].ordered_sites(&m.spacetime);
    let image: Vec<usize> = us
        .iter()
        .map(|&p| {
            let q = m.spacetime.act(a.sym, p).unwrap();
            vs.iter().position(|&s| s == q).unwrap()
        })
        .collect();
    let mut slots: Vec<usize> = (0..vs.len()).filter(|s| !image.contains(s)).collect();
    slots.extend(&image);
    let n = vs.len();
    let mut w = CMatrix::identity(d.pow(n as u32), d.pow(n as u32));
    for pass in 0..n {
        for k in 0..n - 1 - pass {
            if slots[k] > slots[k + 1] {
                slots.swap(k, k + 1);
                w = swap_gate(d, n, k) * w;
            }
        }
    }
    let src = AlgebraShape::matrix(d.pow(us.len() as u32)).unwrap();
    let tgt = AlgebraShape::matrix(d.pow(n as u32)).unwrap();
    let conj = AlgElement::from_blocks(&tgt, vec![w]).unwrap();
    Hom::new(src, tgt, vec![vec![d.pow((n - us.len()) as u32)]], conj, 1e-12).unwrap()
}

#[test]
fn spin_chain_homs_match_swap_network_construction() {
    for (sites, d) in [(4, 2), (3, 3)] {
        let m = MinkCategory::circle(sites).unwrap();
        for (k, a) in m.h_arrows.iter().enumerate() {
            let direct = spin_chain_hom(&m, d, a).unwrap();
            let oracle = swap_network_hom(&m, d, k);
            assert!(direct.distance(&oracle) < 1e-12, "{}", m.arrow_name(a));
        }
    }
}

/// Naive fixpoint: paste every pair of known squares until nothing new appears.
fn naive_gamma(m: &MinkCategory) -> HashSet<SquareId> {
    let td = m.to_thin_double();
    let is_vid = |v: usize| m.v_arrows[v].0 == m.v_arrows[v].1;
    let is_hid = |h: usize| {
        let a = m.h_arrows[h];
        a.source == a.target && a.sym == m.spacetime.identity_symmetry()
    };
    let mut set: HashSet<SquareId> = m
        .squares
        .iter()
        .filter(|s| (is_vid(s.left) && is_vid(s.right)) || (is_hid(s.top) && is_hid(s.bottom) && s.left == s.right))
        .copied()
        .collect();
    loop {
        let list: Vec<SquareId> = set.iter().copied().collect();
        let mut grew = false;
        for a in &list {
            for b in &list {
                if a.bottom == b.top {
                    let left = td.v_compose[&(b.left, a.left)];
                    let right = td.v_compose[&(b.right, a.right)];
                    grew |= set.insert(SquareId { top: a.top, bottom: b.bottom, left, right });
                }
                if a.right == b.left {
                    let top = td.h_compose[&(b.top, a.top)];
                    let bottom = td.h_compose[&(b.bottom, a.bottom)];
                    grew |= set.insert(SquareId { top, bottom, left: a.left, right: b.right });
                }
            }
        }
        if !grew {
            return set;
        }
    }
}

#[test]
fn gamma_closure_matches_naive_fixpoint() {
    for m in [MinkCategory::circle(4).unwrap(), MinkCategory::diamond_grid(3, 3, true).unwrap()] {
        let fast: HashSet<SquareId> = gamma_closure(&m.to_thin_double()).unwrap().squares.into_iter().collect();
        assert_eq!(fast, naive_gamma(&m));
    }
}

/// Dense solve of the time-stepping system: two pinned rows plus one
/// stencil equation per interior point.
fn dense_green(lat: &KgLattice, sign: GreenSign, f: &RVector) -> RVector {
    let (tt, xx) = (lat.cfg.time_steps, lat.cfg.sites);
    let n = tt * xx;
    let idx = |t: usize, x: usize| t * xx + x;
    let m2 = lat.cfg.mass * lat.cfg.mass;
    let mut a = RMatrix::zeros(n, n);
    let mut rhs = RVector::zeros(n);
    let pinned: [usize; 2] = match sign {
        GreenSign::Retarded => [0, 1],
        GreenSign::Advanced => [tt - 1, tt - 2],
    };
    for &t in &pinned {
        for x in 0..xx {
            a[(idx(t, x), idx(t, x))] = 1.0;
        }
    }
    for t in 1..tt - 1 {
        let row_t = match sign {
            GreenSign::Retarded => t + 1,
            GreenSign::Advanced => t - 1,
        };
        for x in 0..xx {
            let row = idx(row_t, x);
            a[(row, idx(t + 1, x))] += 1.0;
            a[(row, idx(t - 1, x))] += 1.0;
            a[(row, idx(t, x))] += m2;
            a[(row, idx(t, (x + 1) % xx))] -= 1.0;
            a[(row, idx(t, (x + xx - 1) % xx))] -= 1.0;
            rhs[row] = f[idx(t, x)];
        }
    }
    a.lu().solve(&rhs).expect("the stepping system is triangular up to ordering")
}

#[test]
fn green_operators_match_dense_solve() {
    for mass in [0.0, 1.0] {
        let lat = KgLattice::new(KgLatticeConfig { time_steps: 6, sites: 5, mass }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut f = RVector::zeros(lat.num_points());
        for p in lat.interior_points() {
            f[p] = rng.gen_range(-1.0..1.0);
        }
        for sign in [GreenSign::Retarded, GreenSign::Advanced] {
            let fast = lat.green(sign, &f).unwrap();
            let oracle = dense_green(&lat, sign, &f);
            assert!((fast - oracle).amax() < 1e-9, "mass {mass}, {sign:?}");
        }
    }
}

#[test]
fn stencil_of_a_delta_for_zero_mass() {
    let lat = KgLattice::new(KgLatticeConfig { time_steps: 5, sites: 5, mass: 0.0 }).unwrap();
    let st = lat.st;
    let p = st.point(2, 2).unwrap();
    let pf = lat.apply_p(&lat.delta(p));
    assert_eq!(pf[p], 0.0);
    assert_eq!(pf[st.point(1, 2).unwrap()], 1.0);
    assert_eq!(pf[st.point(3, 2).unwrap()], 1.0);
    assert_eq!(pf[st.point(2, 1).unwrap()], -1.0);
    assert_eq!(pf[st.point(2, 3).unwrap()], -1.0);
    assert_eq!(pf.iter().filter(|v| **v != 0.0).count(), 4);
}

/// `supp E⁻δ_q` lies in the forward cone of `q`, enumerated pointwise.
#[test]
fn retarded_support_inside_forward_cone() {
    let lat = KgLattice::new(KgLatticeConfig { time_steps: 6, sites: 6, mass: 1.0 }).unwrap();
    let st = lat.st;
    for q in lat.interior_points() {
        let u = lat.green(GreenSign::Retarded, &lat.delta(q)).unwrap();
        let (tq, xq) = st.coords(q);
        for p in 0..lat.num_points() {
            let (tp, xp) = st.coords(p);
            let in_cone = tp > tq && st.space_dist(xp, xq) <= tp - tq - 1;
            if !in_cone {
                assert_eq!(u[p], 0.0, "point {p} outside the cone of {q}");
            }
        }
    }
}

/// `dim V(T) = |S| - rank P F(S₂)` with the rank taken from a fresh SVD.
#[test]
fn class_space_dimensions_match_rank_count() {
    let lat = KgLattice::new(KgLatticeConfig { time_steps: 6, sites: 6, mass: 1.0 }).unwrap();
    let Spacetime::Grid { .. } = lat.st else { unreachable!() };
    for region in aqft_core::nets::kg_regions(&lat) {
        let cs = lat.class_space(&region).unwrap();
        let s = lat.erode(region.points());
        let s2 = lat.erode(&s);
        let mut img = CMatrix::zeros(s.len(), s2.len().max(1));
        for (j, &q) in s2.iter().enumerate() {
            let pf = lat.apply_p(&lat.delta(q));
            for (i, &p) in s.iter().enumerate() {
                img[(i, j)] = c(pf[p], 0.0);
            }
        }
        assert_eq!(cs.dim(), s.len() - rank(&img, 1e-10), "{}", region.name());
    }
}
