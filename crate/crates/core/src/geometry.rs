//! Point storage and the determinant primitives every objective is built on.
//!
//! All determinants are returned as natural logarithms. A Gram matrix whose
//! Cholesky factorisation produces a pivot at or below
//! `SINGULAR_RTOL * trace / dim` is declared singular and maps to `-inf`.

use std::io::Read;

use crate::document::InstanceDocument;
use crate::error::{Error, Result};

pub type PointId = usize;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 64;

/// Relative Cholesky pivot cutoff below which a matrix is treated as singular.
pub const SINGULAR_RTOL: f64 = 1e-12;

/// Negative pivots down to `-PSD_TOL * max(1, trace / dim)` are tolerated as
/// round-off; anything lower is rejected as not PSD.
pub const PSD_TOL: f64 = 1e-10;

/// Symmetry tolerance for externally supplied Gram matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// An immutable collection of `dim`-dimensional vectors keyed by id.
///
/// Points are stored in ascending id order, which fixes every iteration
/// order used downstream.
#[derive(Debug, Clone)]
pub struct PointSet {
    dim: usize,
    ids: Vec<PointId>,
    groups: Vec<Option<usize>>,
    coords: Vec<f64>,
    /// Ids are exactly `0..len`, so an id is its own index.
    dense: bool,
}

impl PointSet {
    pub fn new(dim: usize, points: Vec<(PointId, Option<usize>, Vec<f64>)>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Malformed(format!(
                "dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        let mut points = points;
        points.sort_by_key(|p| p.0);
        let mut ids = Vec::with_capacity(points.len());
        let mut groups = Vec::with_capacity(points.len());
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (id, group, v) in points {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    id,
                    expected: dim,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Malformed(format!("point {id} has a non-finite coordinate")));
            }
            if ids.last() == Some(&id) {
                return Err(Error::DuplicateId(id));
            }
            ids.push(id);
            groups.push(group);
            coords.extend_from_slice(&v);
        }
        let dense = ids.last().is_none_or(|&last| last + 1 == ids.len());
        Ok(Self {
            dim,
            ids,
            groups,
            coords,
            dense,
        })
    }

    /// Points with ids `0..vectors.len()` and no group labels.
    pub fn from_vectors(dim: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            dim,
            vectors.into_iter().enumerate().map(|(i, v)| (i, None, v)).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// All ids, ascending.
    pub fn ids(&self) -> &[PointId] {
        &self.ids
    }

    pub fn contains(&self, id: PointId) -> bool {
        self.position(id).is_some()
    }

    pub fn index_of(&self, id: PointId) -> Result<usize> {
        self.position(id).ok_or(Error::UnknownId(id))
    }

    fn position(&self, id: PointId) -> Option<usize> {
        if self.dense {
            (id < self.ids.len()).then_some(id)
        } else {
            self.ids.binary_search(&id).ok()
        }
    }

    pub fn vector(&self, id: PointId) -> Result<&[f64]> {
        Ok(self.vector_at(self.index_of(id)?))
    }

    pub fn group(&self, id: PointId) -> Result<Option<usize>> {
        Ok(self.groups[self.index_of(id)?])
    }

    pub fn vector_at(&self, idx: usize) -> &[f64] {
        &self.coords[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn id_at(&self, idx: usize) -> PointId {
        self.ids[idx]
    }

    pub fn group_at(&self, idx: usize) -> Option<usize> {
        self.groups[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = (PointId, Option<usize>, &[f64])> + '_ {
        (0..self.len()).map(move |i| (self.ids[i], self.groups[i], self.vector_at(i)))
    }

    /// Restriction to `ids`; order and duplicates in `ids` are irrelevant.
    pub fn subset(&self, ids: &[PointId]) -> Result<PointSet> {
        let mut wanted: Vec<PointId> = ids.to_vec();
        wanted.sort_unstable();
        wanted.dedup();
        let points = wanted
            .into_iter()
            .map(|id| {
                let idx = self.index_of(id)?;
                Ok((id, self.groups[idx], self.vector_at(idx).to_vec()))
            })
            .collect::<Result<Vec<_>>>()?;
        PointSet::new(self.dim, points)
    }

    /// Disjoint union; shared ids are an error.
    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        if self.dim != other.dim {
            return Err(Error::Malformed(format!(
                "cannot merge point sets of dimension {} and {}",
                self.dim, other.dim
            )));
        }
        let points = self
            .iter()
            .chain(other.iter())
            .map(|(id, g, v)| (id, g, v.to_vec()))
            .collect();
        PointSet::new(self.dim, points)
    }

    pub fn mean_squared_norm(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.coords.iter().map(|x| x * x).sum::<f64>() / self.len() as f64
    }

    /// Maps ids to storage indices, failing on the first unknown id.
    pub fn indices(&self, ids: &[PointId]) -> Result<Vec<usize>> {
        ids.iter().map(|&id| self.index_of(id)).collect()
    }
}

/// Builds a [`PointSet`] from a parsed instance document.
pub fn load_pointset(doc: &InstanceDocument) -> Result<PointSet> {
    let points = doc
        .points
        .iter()
        .map(|p| (p.id, p.group, p.coords.clone()))
        .collect();
    PointSet::new(doc.dim, points)
}

/// Reads the CSV layout `id,group,c0,...,c{d-1}`; an empty group cell means
/// no label.
pub fn load_pointset_csv<R: Read>(reader: R) -> Result<PointSet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "id" || &headers[1] != "group" {
        return Err(Error::Malformed(
            "CSV header must start with id,group followed by c0..c{d-1}".into(),
        ));
    }
    let dim = headers.len() - 2;
    for (j, h) in headers.iter().skip(2).enumerate() {
        if h != format!("c{j}") {
            return Err(Error::Malformed(format!("unexpected CSV column {h:?}")));
        }
    }
    let mut points = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let parse_err = |what: &str| Error::Malformed(format!("bad {what} in CSV row {record:?}"));
        let id: PointId = record[0].parse().map_err(|_| parse_err("id"))?;
        let group = match &record[1] {
            "" => None,
            g => Some(g.parse().map_err(|_| parse_err("group"))?),
        };
        let coords = record
            .iter()
            .skip(2)
            .map(|c| c.parse::<f64>().map_err(|_| parse_err("coordinate")))
            .collect::<Result<Vec<_>>>()?;
        points.push((id, group, coords));
    }
    PointSet::new(dim, points)
}

/// A symmetric PSD matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl GramMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    /// Validates shape and symmetry; PSD-ness is checked lazily by
    /// [`log_det_psd`].
    pub fn from_entries(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Malformed(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        for i in 0..dim {
            for j in 0..i {
                if (entries[i * dim + j] - entries[j * dim + i]).abs() > SYMMETRY_TOL {
                    return Err(Error::Malformed(format!("matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|x| x * c).collect(),
        }
    }

    /// Adds `weight * v v^T`, writing both triangles from the same products
    /// so the result stays exactly symmetric.
    fn add_rank_one(&mut self, v: &[f64], weight: f64) {
        let d = self.dim;
        for i in 0..d {
            let wi = weight * v[i];
            for j in 0..=i {
                let x = wi * v[j];
                self.entries[i * d + j] += x;
                if i != j {
                    self.entries[j * d + i] += x;
                }
            }
        }
    }

    fn add_to_diagonal(&mut self, eps: f64) {
        for i in 0..self.dim {
            self.entries[i * self.dim + i] += eps;
        }
    }
}

/// `sum_{i in S} v_i v_i^T`; repeated ids contribute repeatedly.
pub fn gram(points: &PointSet, set: &[PointId]) -> Result<GramMatrix> {
    weighted_gram(points, set, |_| 1.0)
}

/// `sum_{i in S} w(i) v_i v_i^T`.
pub fn weighted_gram(
    points: &PointSet,
    set: &[PointId],
    weight: impl Fn(PointId) -> f64,
) -> Result<GramMatrix> {
    let mut m = GramMatrix::zeros(points.dim());
    for &id in set {
        m.add_rank_one(points.vector(id)?, weight(id));
    }
    Ok(m)
}

/// The `|S| x |S|` matrix of pairwise inner products `w(i)^{1/2} w(j)^{1/2} <v_i, v_j>`.
pub fn weighted_inner_gram(
    points: &PointSet,
    set: &[PointId],
    weight: impl Fn(PointId) -> f64,
) -> Result<GramMatrix> {
    let vs = set
        .iter()
        .map(|&id| Ok((points.vector(id)?, weight(id).sqrt())))
        .collect::<Result<Vec<_>>>()?;
    let k = vs.len();
    let mut m = GramMatrix::zeros(k);
    for i in 0..k {
        for j in 0..=i {
            let x = vs[i].1 * vs[j].1 * dot(vs[i].0, vs[j].0);
            m.entries[i * k + j] = x;
            m.entries[j * k + i] = x;
        }
    }
    Ok(m)
}

pub fn inner_gram(points: &PointSet, set: &[PointId]) -> Result<GramMatrix> {
    weighted_inner_gram(points, set, |_| 1.0)
}

/// `ln det(M)` for a symmetric PSD matrix, `-inf` when declared singular.
pub fn log_det_psd(m: &GramMatrix) -> Result<f64> {
    let d = m.dim;
    if d == 0 {
        return Ok(0.0);
    }
    let scale = m.trace() / d as f64;
    let singular_cut = SINGULAR_RTOL * scale;
    let neg_tol = PSD_TOL * scale.max(1.0);
    let mut l = vec![0.0; d * d];
    let mut log_det = 0.0;
    for j in 0..d {
        let mut pivot = m.get(j, j);
        for k in 0..j {
            pivot -= l[j * d + k] * l[j * d + k];
        }
        if pivot < -neg_tol {
            return Err(Error::NotPsd { pivot });
        }
        if pivot <= singular_cut {
            return Ok(f64::NEG_INFINITY);
        }
        let ljj = pivot.sqrt();
        l[j * d + j] = ljj;
        log_det += pivot.ln();
        for i in j + 1..d {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = s / ljj;
        }
    }
    Ok(log_det)
}

/// Squared volume spanned by the multiset `S`, in log domain.
///
/// For `|S| >= dim` this is `ln det(sum v v^T)`; below full dimension that
/// determinant vanishes identically, so the `|S| x |S|` inner-product Gram
/// is used instead. The two agree at `|S| = dim`.
pub fn log_volume(points: &PointSet, set: &[PointId]) -> Result<f64> {
    log_volume_weighted(points, set, |_| 1.0)
}

/// [`log_volume`] of the vectors `sqrt(w(i)) v_i`.
pub fn log_volume_weighted(
    points: &PointSet,
    set: &[PointId],
    weight: impl Fn(PointId) -> f64,
) -> Result<f64> {
    if set.len() >= points.dim() {
        log_det_psd(&weighted_gram(points, set, weight)?)
    } else {
        log_det_psd(&weighted_inner_gram(points, set, weight)?)
    }
}

/// [`log_volume`] with `eps * I` added to whichever Gram matrix is used.
pub fn log_volume_ridge(points: &PointSet, set: &[PointId], eps: f64) -> Result<f64> {
    let mut m = if set.len() >= points.dim() {
        gram(points, set)?
    } else {
        inner_gram(points, set)?
    };
    m.add_to_diagonal(eps);
    log_det_psd(&m)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
