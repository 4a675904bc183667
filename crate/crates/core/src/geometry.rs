//! Per-cell geometric algebra of a hexahedral cell.
//!
//! Corner convention: vertex `k` sits at reference coordinates
//! `(k & 1, (k >> 1) & 1, (k >> 2) & 1)`. Edge `4μ + ν` is one of the four
//! edges parallel to reference direction `μ`; `ν` enumerates the two
//! remaining reference bits of its base corner (lower axis first).
//!
//! Faces `2μ` and `2μ + 1` are the pair pierced by node vector `b_μ`: face
//! `2μ` lies at `ξ_μ = 0` (node shifted by `-b_μ / 2`), face `2μ + 1` at
//! `ξ_μ = 1`. Face vectors are stored outward oriented.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Relative threshold below which `|det β|` counts as singular.
pub const SINGULAR_DET_REL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite vertex {vertex}")]
    NonFiniteVertex { vertex: usize },
    #[error("degenerate cell: {quantity} = {value:e}")]
    DegenerateCell { quantity: &'static str, value: f64 },
    #[error("singular node-vector basis: |det| = {det:e} (scale {scale:e})")]
    SingularBasis { det: f64, scale: f64 },
}

/// Eight corner positions in canonical order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexVertices(pub [Vec3; 8]);

impl HexVertices {
    pub fn unit_cube() -> Self {
        Self::from_fn(|k| Vec3::new((k & 1) as f64, ((k >> 1) & 1) as f64, ((k >> 2) & 1) as f64))
    }

    pub fn from_fn(f: impl Fn(usize) -> Vec3) -> Self {
        HexVertices(std::array::from_fn(f))
    }

    /// Parallelepiped spanned by three edge vectors from `origin`.
    pub fn parallelepiped(origin: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Self {
        Self::from_fn(|k| origin + a * ((k & 1) as f64) + b * (((k >> 1) & 1) as f64) + c * (((k >> 2) & 1) as f64))
    }

    pub fn map(&self, f: impl Fn(Vec3) -> Vec3) -> Self {
        Self::from_fn(|k| f(self.0[k]))
    }

    /// Geometric node: the vertex average.
    pub fn center(&self) -> Vec3 {
        self.0.iter().sum::<Vec3>() / 8.0
    }
}

/// The two reference axes other than `mu`, in increasing order.
#[inline]
pub fn other_axes(mu: usize) -> (usize, usize) {
    match mu {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// `(base, tip)` corner indices of edge `4μ + ν`.
pub fn edge_corners(edge: usize) -> (usize, usize) {
    let mu = edge / 4;
    let nu = edge % 4;
    let (a, b) = other_axes(mu);
    let base = ((nu & 1) << a) | (((nu >> 1) & 1) << b);
    (base, base | (1 << mu))
}

/// Corner indices of local face `iota`, in cyclic order around the face.
pub fn face_corners(iota: usize) -> [usize; 4] {
    let mu = iota / 2;
    let side = (iota & 1) << mu;
    let (a, b) = other_axes(mu);
    [side, side | (1 << a), side | (1 << a) | (1 << b), side | (1 << b)]
}

/// Sign `(-1)^ι`.
#[inline]
pub fn parity(iota: usize) -> f64 {
    if iota.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Geometry of one hexahedral cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGeometry {
    pub edges: [Vec3; 12],
    /// Node vectors `b_μ`.
    pub node_vectors: [Vec3; 3],
    /// Outward face area vectors.
    pub faces: [Vec3; 6],
    /// Face centers (vertex average of each face).
    pub face_centers: [Vec3; 6],
    /// Node position (vertex average).
    pub center: Vec3,
    pub volume: f64,
    /// Columns are the node vectors.
    pub beta: Mat3,
    /// `(βᵀ)⁻¹`; its column `μ` is the dual vector of `b_μ`.
    pub gamma: Mat3,
    /// Flux coefficients `s[ι][μ] = Σ_ν f_ι^ν γ_νμ`.
    pub flux_coeffs: [[f64; 3]; 6],
}

impl CellGeometry {
    pub fn new(v: &HexVertices) -> Result<Self, GeometryError> {
        for (k, p) in v.0.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(GeometryError::NonFiniteVertex { vertex: k });
            }
        }
        let edges: [Vec3; 12] = std::array::from_fn(|e| {
            let (base, tip) = edge_corners(e);
            v.0[tip] - v.0[base]
        });
        let node_vectors: [Vec3; 3] = std::array::from_fn(|mu| (0..4).map(|nu| edges[4 * mu + nu]).sum::<Vec3>() / 4.0);
        let (beta, gamma) = dual_basis(&node_vectors)?;
        let faces = face_vectors(v);
        let face_centers: [Vec3; 6] =
            std::array::from_fn(|iota| face_corners(iota).iter().map(|&k| v.0[k]).sum::<Vec3>() / 4.0);
        let center = v.center();
        let shifted: [Vec3; 6] = std::array::from_fn(|i| face_centers[i] - center);
        let volume = volume_from_faces(&faces, &shifted);
        let scale = node_vectors.iter().map(|b| b.norm()).fold(0.0, f64::max);
        if !(volume > SINGULAR_DET_REL * scale.powi(3)) {
            return Err(GeometryError::DegenerateCell { quantity: "volume", value: volume });
        }
        let mut geom = CellGeometry {
            edges,
            node_vectors,
            faces,
            face_centers,
            center,
            volume,
            beta,
            gamma,
            flux_coeffs: [[0.0; 3]; 6],
        };
        geom.flux_coeffs = flux_coefficients(&geom.faces, &geom.gamma);
        Ok(geom)
    }

    /// Weight `(-1)^ι s[ι][⌊ι/2⌋]`; strictly negative on a valid cell.
    #[inline]
    pub fn normal_weight(&self, iota: usize) -> f64 {
        parity(iota) * self.flux_coeffs[iota][iota / 2]
    }

    /// Characteristic length `V^(1/3)`.
    pub fn length_scale(&self) -> f64 {
        self.volume.cbrt()
    }

    pub fn face_area(&self, iota: usize) -> f64 {
        self.faces[iota].norm()
    }
}

/// Outward area vectors: a quarter of the cross product of the summed
/// opposite edge pairs bounding each face. Equals the exact area vector of
/// the (possibly warped) bilinear quadrilateral.
fn face_vectors(v: &HexVertices) -> [Vec3; 6] {
    std::array::from_fn(|iota| {
        let mu = iota / 2;
        let side = (iota & 1) << mu;
        let a = (mu + 1) % 3;
        let b = (mu + 2) % 3;
        // the two face edges along a (resp. b): base corners have bit mu = side
        let ea = (v.0[side | (1 << a)] - v.0[side]) + (v.0[side | (1 << a) | (1 << b)] - v.0[side | (1 << b)]);
        let eb = (v.0[side | (1 << b)] - v.0[side]) + (v.0[side | (1 << a) | (1 << b)] - v.0[side | (1 << a)]);
        // (a, b) cyclic after mu: ea x eb points along +b_mu on a right-handed cell
        let f = ea.cross(&eb) / 4.0;
        if iota.is_multiple_of(2) {
            -f
        } else {
            f
        }
    })
}

fn volume_from_faces(faces: &[Vec3; 6], centers: &[Vec3; 6]) -> f64 {
    faces.iter().zip(centers).map(|(f, c)| c.dot(f)).sum::<f64>() / 3.0
}

/// Cell volume by the divergence theorem over the six faces.
pub fn cell_volume(v: &HexVertices) -> Result<f64, GeometryError> {
    let faces = face_vectors(v);
    let centers: [Vec3; 6] = std::array::from_fn(|iota| face_corners(iota).iter().map(|&k| v.0[k]).sum::<Vec3>() / 4.0);
    // shift to the node for better conditioning
    let c0 = v.center();
    let shifted: [Vec3; 6] = std::array::from_fn(|i| centers[i] - c0);
    let vol = volume_from_faces(&faces, &shifted);
    if vol > 0.0 {
        Ok(vol)
    } else {
        Err(GeometryError::DegenerateCell { quantity: "volume", value: vol })
    }
}

/// `β` with columns `b_μ` and `γ = (βᵀ)⁻¹`.
pub fn dual_basis(b: &[Vec3; 3]) -> Result<(Mat3, Mat3), GeometryError> {
    let beta = Mat3::from_columns(b);
    let scale = b.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let det = beta.determinant();
    if !(det.abs() >= SINGULAR_DET_REL * scale.powi(3)) || scale == 0.0 {
        return Err(GeometryError::SingularBasis { det, scale });
    }
    let gamma = beta.transpose().try_inverse().ok_or(GeometryError::SingularBasis { det, scale })?;
    Ok((beta, gamma))
}

/// `s[ι][μ] = Σ_ν f_ι^ν γ_νμ`.
pub fn flux_coefficients(faces: &[Vec3; 6], gamma: &Mat3) -> [[f64; 3]; 6] {
    std::array::from_fn(|iota| {
        let s = gamma.transpose() * faces[iota];
        [s.x, s.y, s.z]
    })
}
