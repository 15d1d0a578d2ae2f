//! Versioned, checksummed binary model files.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "MSVD"
//! 4       4     format version, u32 LE
//! 8       32    SHA-256 of the payload
//! 40      8     payload length, u64 LE
//! 48      ...   payload
//! ```
//!
//! The payload uses the little-endian layout of `mssvdd::codec`: hyperparameters,
//! projections, the dual solution, the pooled training representation, then
//! optional standardization, kernel and NPT state, each behind a presence byte.

use std::fs;
use std::path::Path;

use mssvdd::codec::{Decoder, Encoder};
use mssvdd::data::Standardizer;
use mssvdd::kernel::KernelState;
use mssvdd::model::{Preprocessing, ProjectionSet};
use mssvdd::npt::{NptEmbedding, NptModality, NptState};
use mssvdd::svdd::{DualSolution, PooledPoints};
use mssvdd::{DecisionStrategy, HyperParams, Omega, TrainedModel, Variant};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const MAGIC: &[u8; 4] = b"MSVD";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 48;

fn encode_params(e: &mut Encoder, p: &HyperParams) {
    let variant = match p.variant {
        Variant::Linear => 0,
        Variant::Kernel => 1,
        Variant::Npt => 2,
    };
    e.u8(variant)
        .u8(p.omega.index() as u8)
        .f64(p.c)
        .f64(p.beta)
        .f64(p.sigma)
        .usize(p.d)
        .f64(p.eta)
        .usize(p.max_iter)
        .u8(p.decision.index() as u8)
        .bool(p.center_kernel);
}

fn decode_params(d: &mut Decoder<'_>) -> Result<HyperParams> {
    let variant = match d.u8()? {
        0 => Variant::Linear,
        1 => Variant::Kernel,
        2 => Variant::Npt,
        v => return Err(HarnessError::CorruptFile(format!("unknown variant tag {v}"))),
    };
    let omega_tag = d.u8()?;
    let omega = Omega::from_index(omega_tag as usize)
        .ok_or_else(|| HarnessError::CorruptFile(format!("unknown regularizer tag {omega_tag}")))?;
    let c = d.f64()?;
    let beta = d.f64()?;
    let sigma = d.f64()?;
    let dim = d.usize()?;
    let eta = d.f64()?;
    let max_iter = d.usize()?;
    let ds = d.u8()?;
    let decision = DecisionStrategy::ALL
        .get((ds as usize).wrapping_sub(1))
        .copied()
        .ok_or_else(|| HarnessError::CorruptFile(format!("unknown strategy tag {ds}")))?;
    Ok(HyperParams {
        variant,
        omega,
        c,
        beta,
        sigma,
        d: dim,
        eta,
        max_iter,
        decision,
        center_kernel: d.bool()?,
    })
}

fn encode_mats(e: &mut Encoder, mats: &[nalgebra::DMatrix<f64>]) {
    e.usize(mats.len());
    for m in mats {
        e.matrix(m);
    }
}

fn decode_mats(d: &mut Decoder<'_>) -> Result<Vec<nalgebra::DMatrix<f64>>> {
    let n = d.usize()?;
    if n > d.remaining() {
        return Err(HarnessError::CorruptFile("matrix count exceeds file size".into()));
    }
    (0..n).map(|_| Ok(d.matrix()?)).collect()
}

fn encode_dual(e: &mut Encoder, s: &DualSolution) {
    e.vector(&s.alpha)
        .f64(s.c)
        .indices(&s.support_idx)
        .indices(&s.outlier_idx)
        .f64(s.r_squared)
        .f64(s.objective)
        .f64(s.center_norm_sq)
        .f64(s.kkt_residual)
        .bool(s.degenerate);
}

fn decode_dual(d: &mut Decoder<'_>) -> Result<DualSolution> {
    Ok(DualSolution {
        alpha: d.vector()?,
        c: d.f64()?,
        support_idx: d.indices()?,
        outlier_idx: d.indices()?,
        r_squared: d.f64()?,
        objective: d.f64()?,
        center_norm_sq: d.f64()?,
        kkt_residual: d.f64()?,
        degenerate: d.bool()?,
    })
}

fn encode_preproc(e: &mut Encoder, p: &Preprocessing) {
    e.bool(p.standardizer.is_some());
    if let Some(st) = &p.standardizer {
        e.usize(st.means.len());
        for (m, s) in st.means.iter().zip(&st.stds) {
            e.vector(m).vector(s);
        }
    }
    e.bool(p.kernel.is_some());
    if let Some(k) = &p.kernel {
        encode_mats(e, &k.grams);
        e.f64(k.sigma);
        encode_mats(e, &k.train_x);
        e.bool(k.centered);
    }
    e.bool(p.npt.is_some());
    if let Some(n) = &p.npt {
        e.f64(n.sigma).usize(n.modalities.len());
        for md in &n.modalities {
            e.matrix(&md.gram)
                .matrix(&md.centered)
                .matrix(&md.embedding.phi)
                .vector(&md.embedding.eigenvalues)
                .matrix(&md.embedding.eigenvectors)
                .matrix(&md.train_x);
        }
    }
}

fn decode_preproc(d: &mut Decoder<'_>) -> Result<Preprocessing> {
    let mut p = Preprocessing::default();
    if d.bool()? {
        let n = d.usize()?;
        let (mut means, mut stds) = (Vec::new(), Vec::new());
        for _ in 0..n.min(d.remaining()) {
            means.push(d.vector()?);
            stds.push(d.vector()?);
        }
        p.standardizer = Some(Standardizer { means, stds });
    }
    if d.bool()? {
        let grams = decode_mats(d)?;
        let sigma = d.f64()?;
        let train_x = decode_mats(d)?;
        p.kernel = Some(KernelState {
            grams,
            sigma,
            train_x,
            centered: d.bool()?,
        });
    }
    if d.bool()? {
        let sigma = d.f64()?;
        let n = d.usize()?;
        let mut modalities = Vec::new();
        for _ in 0..n.min(d.remaining()) {
            let gram = d.matrix()?;
            let centered = d.matrix()?;
            let phi = d.matrix()?;
            let eigenvalues = d.vector()?;
            let eigenvectors = d.matrix()?;
            modalities.push(NptModality {
                gram,
                centered,
                embedding: NptEmbedding {
                    phi,
                    eigenvalues,
                    eigenvectors,
                },
                train_x: d.matrix()?,
            });
        }
        p.npt = Some(NptState { modalities, sigma });
    }
    Ok(p)
}

pub fn encode_model(model: &TrainedModel) -> Vec<u8> {
    let mut e = Encoder::new();
    encode_params(&mut e, &model.params);
    encode_mats(&mut e, &model.projections.mats);
    encode_dual(&mut e, &model.dual);
    e.matrix(model.train_repr.matrix())
        .usize(model.train_repr.modalities())
        .usize(model.train_repr.items());
    encode_preproc(&mut e, &model.preproc);
    let payload = e.finish();

    let digest = Sha256::digest(&payload);
    let mut out = Encoder::new();
    out.bytes(MAGIC)
        .u32(FORMAT_VERSION)
        .bytes(digest.as_slice())
        .usize(payload.len())
        .bytes(&payload);
    out.finish()
}

pub fn decode_model(bytes: &[u8]) -> Result<TrainedModel> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(HarnessError::CorruptFile("missing MSVD header".into()));
    }
    let mut header = Decoder::new(&bytes[4..HEADER_LEN]);
    let version = header.u32()?;
    if version != FORMAT_VERSION {
        return Err(HarnessError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let checksum = header.take(32)?.to_vec();
    let len = header.usize()?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != len {
        return Err(HarnessError::CorruptFile(format!(
            "payload is {} bytes, header says {len}",
            payload.len()
        )));
    }
    if Sha256::digest(payload).as_slice() != checksum.as_slice() {
        return Err(HarnessError::CorruptFile("checksum mismatch".into()));
    }

    decode_payload(payload).map_err(|e| match e {
        HarnessError::Core(c) => HarnessError::CorruptFile(c.to_string()),
        other => other,
    })
}

fn decode_payload(payload: &[u8]) -> Result<TrainedModel> {
    let mut d = Decoder::new(payload);
    let params = decode_params(&mut d)?;
    let projections = ProjectionSet::new(decode_mats(&mut d)?)?;
    let dual = decode_dual(&mut d)?;
    let y = d.matrix()?;
    let m = d.usize()?;
    let n = d.usize()?;
    let train_repr = PooledPoints::new(y, m, n)?;
    let preproc = decode_preproc(&mut d)?;
    if !d.is_empty() {
        return Err(HarnessError::CorruptFile(format!("{} trailing payload bytes", d.remaining())));
    }
    Ok(TrainedModel {
        params,
        projections,
        dual,
        train_repr,
        preproc,
    })
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, encode_model(model)).map_err(|e| HarnessError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    decode_model(&bytes)
}
