use std::collections::HashSet;

use cubeflag::certify::{exact_bound, verify, Certificate, Factor, Verdict};
use cubeflag::colour::{apply_map, canonical_form, contains_subcube, density, is_f_free, named_cube, named_family};
use cubeflag::constraints::{enumerate_s, p_phi};
use cubeflag::cube::SignedPermutation;
use cubeflag::flags::{assemble_problem, build_bases, default_basis_dims, direct_pair_density, enumerate_h, p_vector};
use cubeflag::problem::DensityProblem;
use cubeflag::rational::{from_int, ratio, Rational};
use cubeflag::sdp::emit_sdp;
use cubeflag::testing::{random_cube, random_free_host};
use cubeflag::{Colour, CubeColouring, Mode};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_map(rng: &mut ChaCha8Rng, n: usize, fixed: usize) -> SignedPermutation {
    let fixed = fixed.min(n);
    let mut perm: Vec<u8> = (0..n as u8).collect();
    perm[fixed..].shuffle(rng);
    let flips = if n == 0 { 0 } else { rng.gen_range(0..1u64 << n) };
    SignedPermutation::new(perm, flips).unwrap()
}

fn mode_and_dim() -> impl Strategy<Value = (Mode, usize)> {
    prop_oneof![
        (0usize..=4).prop_map(|d| (Mode::Vertex, d)),
        (1usize..=4).prop_map(|d| (Mode::Edge, d)),
        (2usize..=4).prop_map(|d| (Mode::Partial, d)),
    ]
}

fn problem(mode: Mode, l: usize, fam: &str) -> DensityProblem {
    let fam = named_family(fam).unwrap();
    let bases = build_bases(mode, l, &fam, &default_basis_dims(mode, l)).unwrap();
    assemble_problem(mode, l, &fam, bases).unwrap()
}

fn partial_of(e: &CubeColouring) -> CubeColouring {
    let grey = Mode::Partial.grey_positions(e.dim());
    let word = e
        .word()
        .iter()
        .enumerate()
        .map(|(p, &c)| if p < grey { Colour::Grey } else { c })
        .collect();
    CubeColouring::new(Mode::Partial, e.dim(), word).unwrap()
}

/// Random symmetric matrices with entries in `{-4..4}/8`.
fn random_q(rng: &mut ChaCha8Rng, sizes: &[usize]) -> Vec<Vec<Vec<Rational>>> {
    sizes
        .iter()
        .map(|&n| {
            let mut q = vec![vec![from_int(0); n]; n];
            for i in 0..n {
                for j in i..n {
                    let v = ratio(rng.gen_range(-4..=4), 8);
                    q[i][j] = v.clone();
                    q[j][i] = v;
                }
            }
            q
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_form_invariant_under_admissible_maps((mode, dim) in mode_and_dim(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_cube(&mut rng, mode, dim, 0.5);
        let g = random_map(&mut rng, dim, mode.fixed_dirs());
        let image = apply_map(&c, &g).unwrap();
        prop_assert_eq!(canonical_form(&image).unwrap(), canonical_form(&c).unwrap());
        prop_assert_eq!(density(&image).unwrap(), density(&c).unwrap());
    }

    #[test]
    fn containment_monotone_under_red_to_blue(seed in any::<u64>(), vertex in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mode, pattern) = if vertex {
            (Mode::Vertex, named_cube(["B3", "B3-", "B4", "B5"][rng.gen_range(0..4)]).unwrap())
        } else {
            (Mode::Edge, named_cube(["B", "B1", "B2"][rng.gen_range(0..3)]).unwrap())
        };
        let host = random_cube(&mut rng, mode, 4, 0.6);
        if contains_subcube(&host, &pattern).unwrap() {
            for (p, &c) in host.word().iter().enumerate() {
                if c == Colour::Red {
                    let mut word = host.word().to_vec();
                    word[p] = Colour::Blue;
                    let bluer = CubeColouring::new(mode, 4, word).unwrap();
                    prop_assert!(contains_subcube(&bluer, &pattern).unwrap());
                }
            }
        }
    }

    #[test]
    fn partial_freeness_implies_grey_to_red_freeness(seed in any::<u64>(), dim in 2usize..=4, family in 0usize..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fam = named_family(["B", "B1B2"][family]).unwrap();
        let e = random_cube(&mut rng, Mode::Edge, dim, 0.3);
        let c = partial_of(&e);
        if is_f_free(&c, &fam).unwrap() {
            prop_assert!(is_f_free(&c.grey_to_red(), &fam).unwrap());
        }
    }

    #[test]
    fn pair_terms_match_direct_counts(seed in any::<u64>()) {
        // Σ_H c_H p(H;G) = Σ_i Σ_ab q_ab E_θ[p(F_a,F_b,θ;G)] exactly
        let p = problem(Mode::Edge, 3, "B");
        let fam = named_family("B").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_q(&mut rng, &p.bases.iter().map(|b| b.len()).collect::<Vec<_>>());
        let g = random_free_host(&mut rng, Mode::Edge, 4, &fam, 0.7).unwrap();
        let pv = p_vector(&p, &g).unwrap();
        let lhs = pv.iter().enumerate().fold(from_int(0), |acc, (h, ph)| acc + p.pair_term(h, &q) * ph);
        let mut rhs = from_int(0);
        for (basis, qi) in p.bases.iter().zip(&q) {
            for a in 0..basis.len() {
                for b in 0..basis.len() {
                    rhs += &qi[a][b] * direct_pair_density(basis, a, b, &g).unwrap();
                }
            }
        }
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn verify_is_monotone_and_ignores_claims(seed in any::<u64>(), slack in 1i64..1000) {
        let p = problem(Mode::Vertex, 3, "B3-");
        let text = p.to_text();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cert = Certificate::zero(&p);
        for f in &mut cert.factors {
            if let Factor::Upper(r) = f {
                for (i, row) in r.iter_mut().enumerate() {
                    for entry in row.iter_mut().skip(i) {
                        *entry = ratio(rng.gen_range(-8..=8), 64);
                    }
                }
            }
        }
        let bound = exact_bound(&p, &cert).unwrap().bound;
        cert.claimed_bound = ratio(rng.gen_range(0..100), 100);
        let cert_text = cert.to_text();
        let at = verify(&text, &cert_text, &bound);
        prop_assert_eq!(at.verdict, Verdict::Pass);
        prop_assert_eq!(at.bound.clone(), Some(bound.clone()));
        let above = verify(&text, &cert_text, &(bound.clone() + ratio(slack, 1000)));
        prop_assert_eq!(above.verdict, Verdict::Pass);
        let below = verify(&text, &cert_text, &(bound.clone() - ratio(slack, 1_000_000)));
        prop_assert_eq!(below.verdict, Verdict::Fail);
        // reproducible
        prop_assert_eq!(verify(&text, &cert_text, &bound).bound, at.bound);
    }
}

#[test]
fn h_list_closed_under_blue_to_red() {
    for (mode, l, fam) in [(Mode::Edge, 3, "B"), (Mode::Vertex, 3, "B4B5"), (Mode::Partial, 3, "B1B2")] {
        let fam = named_family(fam).unwrap();
        let h = enumerate_h(mode, l, &fam).unwrap();
        let set: HashSet<&CubeColouring> = h.iter().collect();
        for c in &h {
            for (p, &col) in c.word().iter().enumerate() {
                if col == Colour::Blue {
                    let mut word = c.word().to_vec();
                    word[p] = Colour::Red;
                    let redder = canonical_form(&CubeColouring::new(mode, l, word).unwrap()).unwrap();
                    assert!(set.contains(&redder), "{redder} missing");
                }
            }
        }
    }
}

#[test]
fn p_phi_takes_values_in_steps_of_one_over_l_minus_one() {
    let fam = named_family("B").unwrap();
    let l = 3;
    let h = enumerate_h(Mode::Partial, l, &fam).unwrap();
    let s = enumerate_s(l, &fam).unwrap();
    for sc in &s {
        for hc in &h {
            let v = p_phi(sc, hc).unwrap() * from_int(l as i64 - 1);
            assert!(v.is_integer() && v >= from_int(0) && v <= from_int(l as i64 - 1));
        }
    }
}

#[test]
fn sdp_emission_is_deterministic() {
    let p = problem(Mode::Edge, 3, "B1B2");
    let first = emit_sdp(&p).unwrap();
    assert_eq!(first, emit_sdp(&p).unwrap());
    let reparsed = DensityProblem::parse(&p.to_text()).unwrap();
    assert_eq!(first, emit_sdp(&reparsed).unwrap());
}
