//! JSON document schema and conversions.
//!
//! Complex numbers are serialized as two-element `[re, im]` arrays. All
//! floating-point fields are printed with 17 significant digits
//! (`{:.16e}`), which round-trips `f64` exactly and keeps output
//! byte-deterministic.

use std::io;

use serde::{Deserialize, Serialize};

use medsolve_core::certificates::Certificate;
use medsolve_core::ensemble::{Ensemble, Povm};
use medsolve_core::matrix::rank_from_spectrum;
use medsolve_core::{Complex, Matrix64, MedError, RankProfile, Result};

pub const VALIDATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleDocument {
    pub dim: usize,
    pub states: Vec<StateEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateEntry {
    pub p: f64,
    pub rho: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmDocument {
    pub dim: usize,
    pub elements: Vec<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub povm: Vec<Vec<Vec<[f64; 2]>>>,
    pub p_success: f64,
    pub residual: f64,
    pub iterations: usize,
    pub certificate: CertificateDocument,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateDocument {
    pub projectivity_residual: f64,
    pub completeness_residual: f64,
    pub rank_ok: Vec<bool>,
    pub stationarity_residual: f64,
    pub z_hermiticity_residual: f64,
    pub z_min_eigenvalue: f64,
    pub global_min_eigenvalue: f64,
    pub p_success: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorDocument {
    pub error: ErrorBody,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub detail: String,
}

impl ErrorDocument {
    pub fn from_error(e: &MedError) -> Self {
        Self {
            error: ErrorBody {
                kind: e.kind().to_string(),
                detail: e.to_string(),
            },
        }
    }

    pub fn parse_failure(detail: String) -> Self {
        Self {
            error: ErrorBody {
                kind: "ParseError".to_string(),
                detail,
            },
        }
    }
}

fn matrix_from_rows(dim: usize, rows: &[Vec<[f64; 2]>], what: &str) -> Result<Matrix64> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(MedError::ShapeMismatch {
            detail: format!("{what} must be a {dim}x{dim} array of [re, im] pairs"),
        });
    }
    let mut m = Matrix64::zeros(dim, dim);
    for (i, row) in rows.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            m[(i, j)] = complex_entry(re, im)?;
        }
    }
    Ok(m)
}

fn complex_entry(re: f64, im: f64) -> Result<Complex<f64>> {
    if !re.is_finite() || !im.is_finite() {
        return Err(MedError::InvalidEnsemble("non-finite matrix entry".into()));
    }
    Ok(Complex::new(re, im))
}

fn matrix_to_rows(m: &Matrix64) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

/// Parse a document into a validated ensemble. The rank profile comes from
/// the metadata when present, otherwise from the numerical ranks of the
/// states; states must already be ordered by non-increasing rank.
pub fn ensemble_from_document(doc: &EnsembleDocument) -> Result<Ensemble<f64>> {
    let n = doc.dim;
    if n == 0 || doc.states.is_empty() {
        return Err(MedError::InvalidEnsemble("document has no states".into()));
    }
    let mut states = Vec::with_capacity(doc.states.len());
    let mut priors = Vec::with_capacity(doc.states.len());
    for (i, entry) in doc.states.iter().enumerate() {
        let m = matrix_from_rows(n, &entry.rho, &format!("states[{i}].rho"))?;
        states.push(m);
        priors.push(entry.p);
    }

    let ranks = match doc.metadata.as_ref().and_then(|m| m.profile.clone()) {
        Some(r) => r,
        None => states
            .iter()
            .map(|s| {
                let eig = s.hermitian_part().hermitian_eig(f64::INFINITY)?;
                Ok(rank_from_spectrum(&eig.eigenvalues, n))
            })
            .collect::<Result<Vec<usize>>>()?,
    };
    let profile = RankProfile::new(ranks)?;
    if profile.dim() != n {
        return Err(MedError::InvalidEnsemble(format!(
            "state ranks sum to {}, document dimension is {}",
            profile.dim(),
            n
        )));
    }
    let e = Ensemble::new(profile, priors, states)?;
    let report = e.validate(VALIDATION_TOL);
    if !report.passed {
        return Err(MedError::InvalidEnsemble(first_violation(&report)));
    }
    Ok(e)
}

fn first_violation(r: &medsolve_core::ensemble::MembershipReport<f64>) -> String {
    if r.prior_sum_residual > VALIDATION_TOL {
        format!(
            "priors sum to 1 within {VALIDATION_TOL:.0e} violated (residual {:.3e})",
            r.prior_sum_residual
        )
    } else if r.min_prior <= 0.0 {
        "every prior must be positive".into()
    } else if r.hermiticity_residual > VALIDATION_TOL {
        format!(
            "states must be Hermitian (residual {:.3e})",
            r.hermiticity_residual
        )
    } else if r.min_state_eigenvalue < -VALIDATION_TOL {
        format!(
            "states must be positive semidefinite (eigenvalue {:.3e})",
            r.min_state_eigenvalue
        )
    } else if r.trace_residual > VALIDATION_TOL {
        format!(
            "states must have unit trace (residual {:.3e})",
            r.trace_residual
        )
    } else if !r.ranks_ok {
        format!("state ranks {:?} do not match the profile", r.ranks_found)
    } else {
        "state supports must be linearly independent and span the space".into()
    }
}

pub fn document_from_ensemble(e: &Ensemble<f64>, seed: Option<u64>) -> EnsembleDocument {
    EnsembleDocument {
        dim: e.dim(),
        states: (0..e.num_states())
            .map(|i| StateEntry {
                p: e.priors()[i],
                rho: matrix_to_rows(&e.states()[i]),
            })
            .collect(),
        metadata: Some(Metadata {
            seed,
            profile: Some(e.profile().ranks().to_vec()),
        }),
    }
}

pub fn povm_from_document(doc: &PovmDocument, profile: &RankProfile) -> Result<Povm<f64>> {
    if profile.dim() != doc.dim {
        return Err(MedError::ShapeMismatch {
            detail: format!(
                "POVM dimension {} does not match ensemble dimension {}",
                doc.dim,
                profile.dim()
            ),
        });
    }
    let elements = doc
        .elements
        .iter()
        .enumerate()
        .map(|(i, rows)| matrix_from_rows(doc.dim, rows, &format!("elements[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    Povm::new(profile.clone(), elements)
}

pub fn document_from_povm(p: &Povm<f64>) -> PovmDocument {
    PovmDocument {
        dim: p.dim(),
        elements: p.elements().iter().map(matrix_to_rows).collect(),
    }
}

pub fn document_from_certificate(c: &Certificate<f64>) -> CertificateDocument {
    CertificateDocument {
        projectivity_residual: c.projectivity_residual,
        completeness_residual: c.completeness_residual,
        rank_ok: c.rank_ok.clone(),
        stationarity_residual: c.stationarity_residual,
        z_hermiticity_residual: c.z_hermiticity_residual,
        z_min_eigenvalue: c.z_min_eigenvalue,
        global_min_eigenvalue: c.global_min_eigenvalue,
        p_success: c.p_success,
        passed: c.passed,
    }
}

/// JSON serializer writing every float with 17 significant digits.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value
        .serialize(&mut ser)
        .expect("document serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serializer emits UTF-8")
}
