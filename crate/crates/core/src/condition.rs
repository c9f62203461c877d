//! Condition measures of an instance and a-priori bounds on them.
//!
//! Facets of the Newton polytope are found by brute force: every affinely
//! independent `m`-subset of the exponents spans a candidate hyperplane inside
//! `affspan Ω`, kept when all exponents lie weakly on one side. This is exact
//! up to the geometric tolerance and only meant for small instances; see
//! [`FacetLimits`].

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{GpInstance, SubspaceBasis};
use crate::rational;

/// Absolute tolerance for all geometric predicates, applied after scaling by
/// `max(1, spread of the points)`.
pub const GEOMETRIC_TOLERANCE: f64 = 1e-9;

/// Largest sizes accepted by the brute-force facet enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FacetLimits {
    pub max_points: usize,
    pub max_dim: usize,
}

impl Default for FacetLimits {
    fn default() -> Self {
        FacetLimits { max_points: 20, max_dim: 5 }
    }
}

/// A facet `conv Ω ∩ {p : ⟨p, a⟩ = b}` with `a` a unit outward normal lying
/// in the direction space of `affspan Ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    /// Indices of the exponents lying on the facet, ascending.
    pub support: Vec<usize>,
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Facet {
    pub fn normal_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.normal)
    }

    /// `b − ⟨p, a⟩`: nonnegative on the polytope side.
    pub fn slack(&self, p: &DVector<f64>) -> f64 {
        self.offset - self.normal.iter().zip(p.iter()).map(|(a, x)| a * x).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MembershipClass {
    Interior,
    Boundary,
    Outside,
}

/// Position of a point relative to the Newton polytope. `margin` is the
/// smallest facet slack, or minus the distance to `affspan Ω` when the point
/// is off the affine span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub class: MembershipClass,
    pub margin: f64,
}

/// Orthonormal basis of the direction space of `affspan Ω`, i.e. the span of
/// `ω_i − ω_1`.
pub fn affine_basis(points: &DMatrix<f64>) -> SubspaceBasis {
    let mut d = points.clone();
    let anchor = points.column(0).into_owned();
    for mut c in d.column_iter_mut() {
        c -= &anchor;
    }
    SubspaceBasis::spanning(&d)
}

/// Newton polytope of a finite point set with its facet list.
#[derive(Debug, Clone)]
pub struct Polytope {
    points: DMatrix<f64>,
    anchor: DVector<f64>,
    basis: SubspaceBasis,
    facets: Vec<Facet>,
    tolerance: f64,
}

impl Polytope {
    pub fn new(points: &DMatrix<f64>) -> Result<Self> {
        Self::with_limits(points, FacetLimits::default())
    }

    pub fn with_limits(points: &DMatrix<f64>, limits: FacetLimits) -> Result<Self> {
        let basis = affine_basis(points);
        let facets = enumerate_facets_with_limits(points, &basis, limits)?;
        let anchor = points.column(0).into_owned();
        let tolerance = tolerance_for(points, &anchor);
        Ok(Polytope { points: points.clone(), anchor, basis, facets, tolerance })
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn basis(&self) -> &SubspaceBasis {
        &self.basis
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    /// Dimension `m` of the polytope.
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Distance from `p` to `affspan Ω`.
    pub fn affine_residual(&self, p: &DVector<f64>) -> f64 {
        self.basis.residual(&(p - &self.anchor))
    }

    /// `min_F (b_F − ⟨θ, a_F⟩)`: the distance from `θ` to the relative
    /// boundary when nonnegative, negative iff `θ ∉ conv Ω`.
    pub fn r_theta(&self, theta: &DVector<f64>) -> Result<f64> {
        if theta.len() != self.points.nrows() {
            return Err(Error::DimensionMismatch { expected: self.points.nrows(), found: theta.len() });
        }
        let residual = self.affine_residual(theta);
        if residual > self.tolerance {
            return Err(Error::input(format!(
                "shift is at distance {residual:.3e} from the affine span of the exponents"
            )));
        }
        Ok(self.min_slack(theta))
    }

    fn min_slack(&self, p: &DVector<f64>) -> f64 {
        self.facets.iter().map(|f| f.slack(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn membership(&self, theta: &DVector<f64>) -> Membership {
        let residual = self.affine_residual(theta);
        if residual > self.tolerance {
            return Membership { class: MembershipClass::Outside, margin: -residual };
        }
        classify(self.min_slack(theta), self.tolerance)
    }

    /// Smallest distance from an exponent to the affine span of a facet not
    /// containing it.
    pub fn facet_gap(&self) -> f64 {
        compute_facet_gap(&self.points, &self.facets).expect("polytope has facets")
    }

    /// Exact unary facet complexity for integral, full-dimensional point sets;
    /// `None` otherwise.
    pub fn unary_facet_complexity(&self) -> Option<BigInt> {
        if self.dim() != self.points.nrows() {
            return None;
        }
        let ints = integral_entries(&self.points).ok()?;
        let n = self.points.nrows();
        let mut worst = BigInt::zero();
        for facet in &self.facets {
            let s0 = facet.support[0];
            let rows: Vec<Vec<BigRational>> = facet.support[1..]
                .iter()
                .map(|&j| {
                    (0..n)
                        .map(|r| BigRational::from_integer(BigInt::from(ints[(r, j)] - ints[(r, s0)])))
                        .collect()
                })
                .collect();
            let normal = primitive_null_vector(rows, n)?;
            let sup = normal.iter().map(|v| v.abs()).max().unwrap_or_default();
            if sup > worst {
                worst = sup;
            }
        }
        Some(worst)
    }
}

fn classify(margin: f64, tol: f64) -> Membership {
    let class = if margin > tol {
        MembershipClass::Interior
    } else if margin >= -tol {
        MembershipClass::Boundary
    } else {
        MembershipClass::Outside
    };
    Membership { class, margin }
}

fn tolerance_for(points: &DMatrix<f64>, anchor: &DVector<f64>) -> f64 {
    let spread = points.column_iter().map(|c| (c - anchor).norm()).fold(0.0, f64::max);
    GEOMETRIC_TOLERANCE * spread.max(1.0)
}

pub fn enumerate_facets(points: &DMatrix<f64>, basis: &SubspaceBasis) -> Result<Vec<Facet>> {
    enumerate_facets_with_limits(points, basis, FacetLimits::default())
}

/// Facets of `conv Ω` inside `affspan Ω`; `basis` spans the direction space of
/// the affine span (see [`affine_basis`]).
pub fn enumerate_facets_with_limits(
    points: &DMatrix<f64>,
    basis: &SubspaceBasis,
    limits: FacetLimits,
) -> Result<Vec<Facet>> {
    let m = basis.dim();
    let k = points.ncols();
    if m == 0 {
        return Err(Error::PolytopeIsPoint);
    }
    if k > limits.max_points || m > limits.max_dim {
        return Err(Error::SizeGuard(format!(
            "facet enumeration limited to {} points in dimension {}, got {k} points in dimension {m}",
            limits.max_points, limits.max_dim
        )));
    }
    let anchor = points.column(0).into_owned();
    let tol = tolerance_for(points, &anchor);
    let coords: Vec<DVector<f64>> =
        points.column_iter().map(|c| basis.coordinates(&(c - &anchor))).collect();

    // support -> (normal in W coordinates, offset in W coordinates)
    let mut found: BTreeMap<Vec<usize>, (DVector<f64>, f64)> = BTreeMap::new();
    for subset in Combinations::new(k, m) {
        let Some(normal) = hyperplane_normal(&coords, &subset, tol) else {
            continue;
        };
        let base = normal.dot(&coords[subset[0]]);
        let heights: Vec<f64> = coords.iter().map(|y| normal.dot(y) - base).collect();
        let normal = if heights.iter().all(|h| *h <= tol) {
            normal
        } else if heights.iter().all(|h| *h >= -tol) {
            -normal
        } else {
            continue;
        };
        let support: Vec<usize> = (0..k).filter(|&i| heights[i].abs() <= tol).collect();
        if found.contains_key(&support) {
            continue;
        }
        let (normal, offset) = refit(&coords, &support, &normal);
        found.insert(support, (normal, offset));
    }

    // Merge candidates whose hyperplanes agree even though tolerance effects
    // gave them different supports.
    let mut merged: Vec<(Vec<usize>, DVector<f64>, f64)> = Vec::new();
    for (support, (normal, offset)) in found {
        if let Some(existing) = merged.iter_mut().find(|(_, a, b)| {
            (a - &normal).amax() <= GEOMETRIC_TOLERANCE && (b - offset).abs() <= tol
        }) {
            let mut s: Vec<usize> = existing.0.iter().chain(support.iter()).copied().collect();
            s.sort_unstable();
            s.dedup();
            existing.0 = s;
        } else {
            merged.push((support, normal, offset));
        }
    }
    merged.sort_by(|a, b| a.0.cmp(&b.0));

    Ok(merged
        .into_iter()
        .map(|(support, normal_w, offset_w)| {
            let normal = basis.lift(&normal_w);
            let offset = anchor.dot(&normal) + offset_w;
            Facet { support, normal: normal.iter().copied().collect(), offset }
        })
        .collect())
}

/// Unit normal of the hyperplane through the given affinely independent
/// points, or `None` when they are affinely dependent.
fn hyperplane_normal(coords: &[DVector<f64>], subset: &[usize], tol: f64) -> Option<DVector<f64>> {
    let m = coords[0].len();
    if m == 1 {
        return Some(DVector::from_element(1, 1.0));
    }
    let mut a = DMatrix::zeros(m, m);
    for (r, &j) in subset[1..].iter().enumerate() {
        a.set_row(r, &(&coords[j] - &coords[subset[0]]).transpose());
    }
    let svd = a.svd(false, true);
    let sv = &svd.singular_values;
    let smallest = sv.imin();
    if (0..m).filter(|&i| i != smallest).any(|i| sv[i] <= tol) {
        return None;
    }
    let v_t = svd.v_t.expect("requested V");
    let normal = v_t.row(smallest).transpose();
    Some(normal.normalize())
}

/// Least-squares hyperplane through all support points, oriented like
/// `guide`.
fn refit(coords: &[DVector<f64>], support: &[usize], guide: &DVector<f64>) -> (DVector<f64>, f64) {
    let m = guide.len();
    let centroid =
        support.iter().fold(DVector::zeros(m), |acc, &i| acc + &coords[i]) / support.len() as f64;
    let normal = if m == 1 {
        guide.clone()
    } else {
        let mut a = DMatrix::zeros(support.len().max(m), m);
        for (r, &i) in support.iter().enumerate() {
            a.set_row(r, &(&coords[i] - &centroid).transpose());
        }
        let svd = a.svd(false, true);
        let v_t = svd.v_t.expect("requested V");
        let smallest = svd.singular_values.imin();
        let n = v_t.row(smallest).transpose().normalize();
        if n.dot(guide) < 0.0 {
            -n
        } else {
            n
        }
    };
    let offset = normal.dot(&centroid);
    (normal, offset)
}

/// Lexicographic `m`-subsets of `0..k`.
struct Combinations {
    k: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(k: usize, m: usize) -> Self {
        let current = (m <= k).then(|| (0..m).collect());
        Combinations { k, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let m = out.len();
        let mut next = out.clone();
        let mut i = m;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.k - m + i {
                next[i] += 1;
                for j in i + 1..m {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

pub fn compute_r_theta(polytope: &Polytope, theta: &DVector<f64>) -> Result<f64> {
    polytope.r_theta(theta)
}

pub fn membership(polytope: &Polytope, theta: &DVector<f64>) -> Membership {
    polytope.membership(theta)
}

/// `min over facets F and ω ∉ F of (b_F − ⟨ω, a_F⟩)`.
pub fn compute_facet_gap(points: &DMatrix<f64>, facets: &[Facet]) -> Result<f64> {
    if facets.is_empty() {
        return Err(Error::PolytopeIsPoint);
    }
    let mut gap = f64::INFINITY;
    for facet in facets {
        for (i, w) in points.column_iter().enumerate() {
            if facet.support.binary_search(&i).is_err() {
                gap = gap.min(facet.slack(&w.into_owned()));
            }
        }
    }
    Ok(gap)
}

/// `R_θ = max_i ‖ω_i − θ‖₂`.
pub fn compute_big_r_theta(points: &DMatrix<f64>, theta: &DVector<f64>) -> f64 {
    points.column_iter().map(|c| (c - theta).norm()).fold(0.0, f64::max)
}

/// `β = ‖q‖₁ / min_i q_i`.
pub fn compute_beta(q: &DVector<f64>) -> f64 {
    q.sum() / q.min()
}

/// `N = max_{i≠j} ‖ω_i − ω_j‖₂`, zero for a single exponent.
pub fn compute_diameter(points: &DMatrix<f64>) -> f64 {
    let k = points.ncols();
    let mut d: f64 = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            d = d.max((points.column(i) - points.column(j)).norm());
        }
    }
    d
}

/// All condition measures of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Distance from the shift to the relative boundary; `None` when the shift
    /// is outside the polytope, the polytope is a point, or facets were not
    /// enumerated.
    pub r_theta: Option<f64>,
    #[serde(rename = "R_theta")]
    pub big_r_theta: f64,
    pub beta: f64,
    pub diameter_n: f64,
    pub facet_gap: Option<f64>,
    pub subspace_dim: usize,
    /// `None` when facets were skipped by the size guard.
    pub well_conditioned: Option<bool>,
    pub membership: Option<Membership>,
    pub facets_skipped: bool,
}

/// Computes the report and, when within `limits`, the polytope it was derived
/// from.
pub fn condition_report(inst: &GpInstance, limits: FacetLimits) -> (ConditionReport, Option<Polytope>) {
    let points = inst.exponents();
    let theta = inst.shift();
    let big_r_theta = compute_big_r_theta(points, theta);
    let beta = compute_beta(inst.coefficients());
    let diameter_n = compute_diameter(points);
    let basis = affine_basis(points);
    let m = basis.dim();
    let mut report = ConditionReport {
        r_theta: None,
        big_r_theta,
        beta,
        diameter_n,
        facet_gap: None,
        subspace_dim: m,
        well_conditioned: None,
        membership: None,
        facets_skipped: false,
    };
    if m == 0 {
        let anchor = points.column(0).into_owned();
        let dist = (theta - &anchor).norm();
        let tol = GEOMETRIC_TOLERANCE;
        let inside = dist <= tol;
        report.well_conditioned = Some(inside);
        report.membership = Some(if inside {
            Membership { class: MembershipClass::Interior, margin: 0.0 }
        } else {
            Membership { class: MembershipClass::Outside, margin: -dist }
        });
        return (report, None);
    }
    match Polytope::with_limits(points, limits) {
        Ok(poly) => {
            let mem = poly.membership(theta);
            report.facet_gap = Some(poly.facet_gap());
            report.r_theta = (mem.class != MembershipClass::Outside).then_some(mem.margin.max(0.0));
            report.well_conditioned = Some(mem.class == MembershipClass::Interior);
            report.membership = Some(mem);
            (report, Some(poly))
        }
        Err(_) => {
            report.facets_skipped = true;
            (report, None)
        }
    }
}

// ---------------------------------------------------------------------------
// Total unimodularity

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TuVerdict {
    TotallyUnimodular,
    /// A witness square submatrix and its determinant.
    NotTotallyUnimodular { rows: Vec<usize>, cols: Vec<usize>, det: BigInt },
    /// The size guard refused the brute-force check.
    Undecided,
}

/// Largest `min(n, k)` checked without `force`.
pub const TU_GUARD: usize = 8;

fn integral_entries(points: &DMatrix<f64>) -> Result<DMatrix<i64>> {
    const LIMIT: f64 = 9007199254740992.0; // 2^53
    if let Some(v) = points.iter().find(|v| v.fract() != 0.0 || v.abs() > LIMIT) {
        return Err(Error::input(format!("exponents must be integral, found {v}")));
    }
    Ok(points.map(|v| v as i64))
}

/// Checks every square submatrix of the matrix whose columns are the
/// exponents, in exact integer arithmetic.
pub fn check_totally_unimodular(points: &DMatrix<f64>, force: bool) -> Result<TuVerdict> {
    let a = integral_entries(points)?;
    let (n, k) = a.shape();
    for c in 0..k {
        for r in 0..n {
            if a[(r, c)].abs() > 1 {
                return Ok(TuVerdict::NotTotallyUnimodular {
                    rows: vec![r],
                    cols: vec![c],
                    det: BigInt::from(a[(r, c)]),
                });
            }
        }
    }
    let max_size = n.min(k);
    if max_size > TU_GUARD && !force {
        return Ok(TuVerdict::Undecided);
    }
    for size in 2..=max_size {
        for rows in Combinations::new(n, size) {
            for cols in Combinations::new(k, size) {
                let det = determinant(&a, &rows, &cols);
                if det.abs() > BigInt::one() {
                    return Ok(TuVerdict::NotTotallyUnimodular { rows, cols, det });
                }
            }
        }
    }
    Ok(TuVerdict::TotallyUnimodular)
}

fn determinant(a: &DMatrix<i64>, rows: &[usize], cols: &[usize]) -> BigInt {
    let sub: Vec<Vec<i128>> =
        rows.iter().map(|&r| cols.iter().map(|&c| a[(r, c)] as i128).collect()).collect();
    match bareiss_i128(sub.clone()) {
        Some(d) => BigInt::from(d),
        None => bareiss_big(sub.into_iter().map(|r| r.into_iter().map(BigInt::from).collect()).collect()),
    }
}

/// Fraction-free elimination; `None` on overflow.
fn bareiss_i128(mut m: Vec<Vec<i128>>) -> Option<i128> {
    let n = m.len();
    let mut sign = 1;
    let mut prev = 1i128;
    for p in 0..n {
        if m[p][p] == 0 {
            let Some(swap) = (p + 1..n).find(|&r| m[r][p] != 0) else {
                return Some(0);
            };
            m.swap(p, swap);
            sign = -sign;
        }
        for i in p + 1..n {
            for j in p + 1..n {
                let v = m[i][j].checked_mul(m[p][p])?.checked_sub(m[i][p].checked_mul(m[p][j])?)?;
                m[i][j] = v / prev;
            }
            m[i][p] = 0;
        }
        prev = m[p][p];
    }
    Some(sign * m[n - 1][n - 1])
}

fn bareiss_big(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    let mut negate = false;
    let mut prev = BigInt::one();
    for p in 0..n {
        if m[p][p].is_zero() {
            match (p + 1..n).find(|&r| !m[r][p].is_zero()) {
                Some(r) => {
                    m.swap(p, r);
                    negate = !negate;
                }
                None => return BigInt::zero(),
            }
        }
        for i in p + 1..n {
            for j in p + 1..n {
                let v = &m[i][j] * &m[p][p] - &m[i][p] * &m[p][j];
                m[i][j] = v / &prev;
            }
            m[i][p] = BigInt::zero();
        }
        prev = m[p][p].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if negate {
        -d
    } else {
        d
    }
}

/// Primitive integer generator of a one-dimensional null space, or `None`
/// when the null space has another dimension.
fn primitive_null_vector(mut rows: Vec<Vec<BigRational>>, n: usize) -> Option<Vec<BigInt>> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let factor = rows[i][c].clone();
                for j in 0..n {
                    let sub = &factor * &rows[r][j];
                    rows[i][j] -= sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if pivots.len() + 1 != n {
        return None;
    }
    let free = (0..n).find(|c| !pivots.contains(c))?;
    let mut v = vec![BigRational::zero(); n];
    v[free] = BigRational::one();
    for (row, &c) in pivots.iter().enumerate() {
        v[c] = -rows[row][free].clone();
    }
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    Some(ints.into_iter().map(|x| x / &gcd).collect())
}

// ---------------------------------------------------------------------------
// A-priori bounds

/// A bound of the form `2^log2`, kept as an exponent because the values
/// routinely leave the range of a double.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerOfTwo {
    pub log2: i64,
}

impl PowerOfTwo {
    pub fn value(&self) -> f64 {
        2f64.powf(self.log2 as f64)
    }
}

fn max_exponent_encoding(inst: &GpInstance) -> Result<(u64, &crate::instance::RationalForm)> {
    let rf = inst
        .rational_form()
        .ok_or_else(|| Error::input("exact rational exponents are required for encoding-length bounds"))?;
    let max = rf.exponents.iter().map(|w| rational::vector_encoding_length(w)).max().unwrap_or(0);
    Ok((max, rf))
}

/// Lower bound `2^{−(6n² max⟨ω_i⟩ + ⟨θ⟩ − n)}` on `r_θ` for well-conditioned
/// rational instances, or `2^{−(3n² max⟨ω_i⟩ − n)}` when `θ = 0`.
pub fn bit_bound_r_theta(inst: &GpInstance) -> Result<PowerOfTwo> {
    let (enc, rf) = max_exponent_encoding(inst)?;
    let n = inst.n() as i64;
    let enc = enc as i64;
    let exponent = if rf.shift.iter().all(|v| v.is_zero()) {
        3 * n * n * enc - n
    } else {
        6 * n * n * enc + rational::vector_encoding_length(&rf.shift) as i64 - n
    };
    Ok(PowerOfTwo { log2: -exponent })
}

/// Lower bound `2^{−((6n²+1) max⟨ω_i⟩ − n)}` on the facet gap.
pub fn bit_bound_facet_gap(inst: &GpInstance) -> Result<PowerOfTwo> {
    let (enc, _) = max_exponent_encoding(inst)?;
    let n = inst.n() as i64;
    Ok(PowerOfTwo { log2: -((6 * n * n + 1) * enc as i64 - n) })
}

/// Upper bound `2^{3n³ max⟨ω_i⟩ − n}` on the unary facet complexity of an
/// integral polytope.
pub fn bit_bound_ufc(inst: &GpInstance) -> Result<PowerOfTwo> {
    let (enc, rf) = max_exponent_encoding(inst)?;
    if !rf.exponents.iter().flatten().all(rational::is_integral) {
        return Err(Error::input("unary facet complexity needs integral exponents"));
    }
    let n = inst.n() as i64;
    Ok(PowerOfTwo { log2: 3 * n * n * n * enc as i64 - n })
}

/// How the caller vouches for total unimodularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuCertification {
    /// Run the brute-force check (subject to the size guard).
    Check,
    /// Trust the caller, e.g. for graph incidence matrices.
    Assume,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuBounds {
    pub facet_gap_lower: f64,
    pub r_theta_lower: f64,
}

/// `φ ≥ n^{−3/2}` and `r_θ ≥ 2^{−⟨θ⟩} n^{−3/2}` (`n^{−3/2}` when `θ = 0`) for
/// totally unimodular exponents.
pub fn tu_condition_bounds(inst: &GpInstance, certification: TuCertification) -> Result<TuBounds> {
    if certification == TuCertification::Check {
        match check_totally_unimodular(inst.exponents(), false)? {
            TuVerdict::TotallyUnimodular => {}
            TuVerdict::NotTotallyUnimodular { .. } => {
                return Err(Error::input("exponents are not totally unimodular"))
            }
            TuVerdict::Undecided => {
                return Err(Error::input("total unimodularity undecided (size guard); assert it explicitly"))
            }
        }
    }
    let n = inst.n() as f64;
    let base = n.powf(-1.5);
    let exact = inst.clone().with_exact_rationals();
    let shift = &exact.rational_form().expect("attached above").shift;
    let r_theta_lower = if shift.iter().all(|v| v.is_zero()) {
        base
    } else {
        let enc = rational::vector_encoding_length(shift) as f64;
        base * 2f64.powf(-enc)
    };
    Ok(TuBounds { facet_gap_lower: base, r_theta_lower })
}

/// `log β / r_θ`: some exact minimizer has at most this norm.
pub fn diameter_bound_wc(beta: f64, r_theta: f64) -> Result<f64> {
    if !(r_theta > 0.0) {
        return Err(Error::input("well-conditioned diameter bound needs r_theta > 0"));
    }
    Ok(beta.ln() / r_theta)
}

/// `(m/φ) log(2β/δ)`: some δ-minimizer has at most this norm.
pub fn diameter_bound_general(m: usize, facet_gap: f64, beta: f64, delta: f64) -> Result<f64> {
    if !(facet_gap > 0.0) {
        return Err(Error::input("facet gap must be positive"));
    }
    if !(delta > 0.0 && delta < 2.0 * beta) {
        return Err(Error::input("need 0 < delta < 2 beta"));
    }
    Ok(m as f64 / facet_gap * (2.0 * beta / delta).ln())
}

impl TuVerdict {
    pub fn is_unimodular(&self) -> bool {
        matches!(self, TuVerdict::TotallyUnimodular)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols(points: &[&[f64]]) -> DMatrix<f64> {
        let n = points[0].len();
        DMatrix::from_fn(n, points.len(), |r, c| points[c][r])
    }

    fn interval() -> DMatrix<f64> {
        cols(&[&[0.0], &[0.5], &[1.0]])
    }

    fn square() -> DMatrix<f64> {
        cols(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]])
    }

    #[test]
    fn combinations_are_lexicographic() {
        let all: Vec<_> = Combinations::new(4, 2).collect();
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
    }

    #[test]
    fn interval_facets_are_endpoints() {
        let p = Polytope::new(&interval()).unwrap();
        let f = p.facets();
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].support, vec![0]);
        assert!((f[0].normal[0] + 1.0).abs() < 1e-12 && f[0].offset.abs() < 1e-12);
        assert_eq!(f[1].support, vec![2]);
        assert!((f[1].normal[0] - 1.0).abs() < 1e-12 && (f[1].offset - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_has_four_edges() {
        let p = Polytope::new(&square()).unwrap();
        assert_eq!(p.facets().len(), 4);
        for f in p.facets() {
            assert_eq!(f.support.len(), 2);
            assert!((f.normal_vector().norm() - 1.0).abs() < 1e-12);
        }
        assert!((p.facet_gap() - 1.0).abs() < 1e-12);
        assert_eq!(p.unary_facet_complexity(), Some(BigInt::one()));
    }

    #[test]
    fn r_theta_examples() {
        let p = Polytope::new(&interval()).unwrap();
        let t = |v: f64| DVector::from_element(1, v);
        assert!((p.r_theta(&t(0.5)).unwrap() - 0.5).abs() < 1e-12);
        assert!(p.r_theta(&t(0.0)).unwrap().abs() < 1e-12);
        let sq = Polytope::new(&square()).unwrap();
        let r = sq.r_theta(&DVector::from_vec(vec![0.25, 0.5])).unwrap();
        assert!((r - 0.25).abs() < 1e-12);
    }

    #[test]
    fn membership_classes() {
        let p = Polytope::new(&interval()).unwrap();
        let t = |v: f64| DVector::from_element(1, v);
        let m = p.membership(&t(0.5));
        assert_eq!(m.class, MembershipClass::Interior);
        assert!((m.margin - 0.5).abs() < 1e-12);
        assert_eq!(p.membership(&t(0.0)).class, MembershipClass::Boundary);
        let out = p.membership(&t(-0.1));
        assert_eq!(out.class, MembershipClass::Outside);
        assert!((out.margin + 0.1).abs() < 1e-12);
    }

    #[test]
    fn off_affine_span_is_outside() {
        let seg = cols(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let p = Polytope::new(&seg).unwrap();
        let theta = DVector::from_vec(vec![0.5, 0.3]);
        let m = p.membership(&theta);
        assert_eq!(m.class, MembershipClass::Outside);
        assert!((m.margin + 0.3).abs() < 1e-12);
        assert!(p.r_theta(&theta).is_err());
    }

    #[test]
    fn facet_gap_tight_example() {
        let p = Polytope::new(&cols(&[&[0.0], &[0.25], &[1.0]])).unwrap();
        assert!((p.facet_gap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn simplex_in_three_space() {
        let simplex = cols(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let p = Polytope::new(&simplex).unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.facets().len(), 3);
        let expected = 2f64.sqrt() * 3f64.sqrt() / 2.0;
        assert!((p.facet_gap() - expected).abs() < 1e-12);
        // Lower-dimensional: exact ufc not computed.
        assert_eq!(p.unary_facet_complexity(), None);
        let bary = DVector::from_element(3, 1.0 / 3.0);
        let r = p.r_theta(&bary).unwrap();
        // inradius of an equilateral triangle with side √2
        assert!((r - 2f64.sqrt() / (2.0 * 3f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn point_polytope_errors() {
        let pt = cols(&[&[1.0, 2.0], &[1.0, 2.0]]);
        assert!(matches!(Polytope::new(&pt), Err(Error::PolytopeIsPoint)));
        assert!(matches!(compute_facet_gap(&pt, &[]), Err(Error::PolytopeIsPoint)));
    }

    #[test]
    fn size_guard() {
        let many = DMatrix::from_fn(1, 21, |_, c| c as f64);
        assert!(matches!(Polytope::new(&many), Err(Error::SizeGuard(_))));
        let limits = FacetLimits { max_points: 30, max_dim: 5 };
        assert_eq!(Polytope::with_limits(&many, limits).unwrap().facets().len(), 2);
    }

    #[test]
    fn simple_measures() {
        let pts = interval();
        assert!((compute_big_r_theta(&pts, &DVector::zeros(1)) - 1.0).abs() < 1e-15);
        assert!((compute_beta(&DVector::from_element(3, 1.0)) - 3.0).abs() < 1e-15);
        assert!((compute_diameter(&pts) - 1.0).abs() < 1e-15);
        assert_eq!(compute_diameter(&cols(&[&[3.0]])), 0.0);
    }

    #[test]
    fn tu_examples() {
        // directed path 1→2→3: columns e1−e2, e2−e3
        let path = cols(&[&[1.0, -1.0, 0.0], &[0.0, 1.0, -1.0]]);
        assert!(check_totally_unimodular(&path, false).unwrap().is_unimodular());
        let bad = cols(&[&[1.0, 1.0], &[1.0, -1.0]]);
        match check_totally_unimodular(&bad, false).unwrap() {
            TuVerdict::NotTotallyUnimodular { det, .. } => assert_eq!(det, BigInt::from(-2)),
            v => panic!("unexpected {v:?}"),
        }
        let id = DMatrix::<f64>::identity(4, 4);
        assert!(check_totally_unimodular(&id, false).unwrap().is_unimodular());
        assert!(check_totally_unimodular(&cols(&[&[0.5]]), false).is_err());
        let big = DMatrix::<f64>::identity(9, 9);
        assert_eq!(check_totally_unimodular(&big, false).unwrap(), TuVerdict::Undecided);
        assert!(check_totally_unimodular(&big, true).unwrap().is_unimodular());
    }

    #[test]
    fn bareiss_matches_cofactor_expansion() {
        let m = vec![vec![2i128, -1, 3], vec![0, 4, 1], vec![5, 2, -2]];
        // 2(−8−2) + 1(0−5) + 3(0−20) = −20 − 5 − 60
        assert_eq!(bareiss_i128(m.clone()), Some(-85));
        let big = bareiss_big(m.into_iter().map(|r| r.into_iter().map(BigInt::from).collect()).collect());
        assert_eq!(big, BigInt::from(-85));
        assert_eq!(bareiss_i128(vec![vec![0, 1], vec![0, 1]]), Some(0));
        assert_eq!(bareiss_i128(vec![vec![0, 1], vec![1, 0]]), Some(-1));
    }

    #[test]
    fn complete_digraph_bounds() {
        let mut ex = vec![];
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let mut w = vec![0.0; 3];
                    w[i] = 1.0;
                    w[j] = -1.0;
                    ex.push(w);
                }
            }
        }
        let inst = GpInstance::new(ex, vec![1.0; 6], vec![0.0; 3]).unwrap();
        let b = tu_condition_bounds(&inst, TuCertification::Check).unwrap();
        assert!((b.r_theta_lower - 3f64.powf(-1.5)).abs() < 1e-15);
        assert!((b.facet_gap_lower - 3f64.powf(-1.5)).abs() < 1e-15);
        let bad = GpInstance::new(vec![vec![1.0, 1.0], vec![1.0, -1.0]], vec![1.0; 2], vec![0.0; 2]).unwrap();
        assert!(tu_condition_bounds(&bad, TuCertification::Check).is_err());
    }

    #[test]
    fn bit_bounds() {
        use num_rational::BigRational as Q;
        let z = |p: i64, q: i64| Q::new(p.into(), q.into());
        let inst = GpInstance::from_rationals(vec![vec![z(0, 1)], vec![z(1, 1)]], vec![1.0, 1.0], vec![z(1, 2)]).unwrap();
        let b = bit_bound_r_theta(&inst).unwrap();
        // 6·1·⟨1⟩ + ⟨1/2⟩ − 1 = 18 + 4 − 1
        assert_eq!(b.log2, -21);
        assert!(b.value() > 0.0 && b.value() <= 0.5);
        let zero = GpInstance::from_rationals(vec![vec![z(-1, 1)], vec![z(1, 1)]], vec![1.0, 1.0], vec![z(0, 1)]).unwrap();
        // ⟨−1⟩ = ⟨1⟩ = 3
        assert_eq!(bit_bound_r_theta(&zero).unwrap().log2, -(3 * 3 - 1));
        assert_eq!(bit_bound_facet_gap(&inst).unwrap().log2, -(7 * 3 - 1));
        assert_eq!(bit_bound_ufc(&inst).unwrap().log2, 3 * 3 - 1);
        let plain = GpInstance::new(vec![vec![0.0]], vec![1.0], vec![0.0]).unwrap();
        assert!(bit_bound_r_theta(&plain).is_err());
    }

    #[test]
    fn diameter_bounds() {
        assert!((diameter_bound_wc(3.0, 0.5).unwrap() - 3f64.ln() / 0.5).abs() < 1e-15);
        assert!(diameter_bound_wc(3.0, 0.0).is_err());
        let g = diameter_bound_general(1, 0.25, 3.0, 1e-2).unwrap();
        assert!((g - 4.0 * 600f64.ln()).abs() < 1e-12);
        assert!(diameter_bound_general(1, 0.25, 3.0, 6.0).is_err());
    }

    #[test]
    fn report_for_point_and_guarded_instances() {
        let inst = GpInstance::new(vec![vec![1.0, 1.0]], vec![2.0], vec![1.0, 1.0]).unwrap();
        let (r, poly) = condition_report(&inst, FacetLimits::default());
        assert!(poly.is_none());
        assert_eq!(r.subspace_dim, 0);
        assert_eq!(r.well_conditioned, Some(true));
        assert_eq!(r.facet_gap, None);
        let big = GpInstance::new((0..25).map(|i| vec![i as f64]).collect(), vec![1.0; 25], vec![3.0]).unwrap();
        let (r, _) = condition_report(&big, FacetLimits::default());
        assert!(r.facets_skipped);
        assert_eq!(r.well_conditioned, None);
    }
}
