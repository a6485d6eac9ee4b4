//! BLS12-381 group kernels for the Groth16 backend: point arithmetic,
//! multi-scalar multiplication, pairing-product checks and the zcash
//! compressed encoding. Scalars arrive as Python ints already reduced mod r.

use ark_bls12_381::{Bls12_381, Fr, G1Affine, G1Projective, G2Affine, G2Projective};
use ark_ec::pairing::Pairing;
use ark_ec::{CurveGroup, PrimeGroup, VariableBaseMSM};
use ark_ff::{PrimeField, Zero};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize, Compress, Validate};
use num_bigint::BigUint;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn to_fr(k: &BigUint) -> Fr {
    Fr::from_le_bytes_mod_order(&k.to_bytes_le())
}

macro_rules! group_class {
    ($name:ident, $proj:ty, $aff:ty, $len:expr) => {
        #[pyclass(frozen, skip_from_py_object, module = "zkpfedeval._curve_native")]
        #[derive(Clone)]
        pub struct $name {
            p: $proj,
        }

        #[pymethods]
        impl $name {
            #[classattr]
            const ENCODED_LEN: usize = $len;

            #[staticmethod]
            fn generator() -> Self {
                Self { p: <$proj>::generator() }
            }

            #[staticmethod]
            fn identity() -> Self {
                Self { p: <$proj>::zero() }
            }

            #[staticmethod]
            #[pyo3(signature = (data, validate = true))]
            fn from_bytes(data: &[u8], validate: bool) -> PyResult<Self> {
                if data.len() != $len {
                    return Err(PyValueError::new_err("bad point encoding length"));
                }
                let v = if validate { Validate::Yes } else { Validate::No };
                let a = <$aff>::deserialize_with_mode(data, Compress::Yes, v)
                    .map_err(|e| PyValueError::new_err(format!("invalid point: {e}")))?;
                Ok(Self { p: a.into() })
            }

            fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
                let mut out = Vec::with_capacity($len);
                self.p
                    .into_affine()
                    .serialize_compressed(&mut out)
                    .expect("serialization into Vec cannot fail");
                PyBytes::new(py, &out)
            }

            fn is_identity(&self) -> bool {
                self.p.is_zero()
            }

            fn __add__(&self, other: &Self) -> Self {
                Self { p: self.p + other.p }
            }

            fn __sub__(&self, other: &Self) -> Self {
                Self { p: self.p - other.p }
            }

            fn __neg__(&self) -> Self {
                Self { p: -self.p }
            }

            fn __mul__(&self, k: BigUint) -> Self {
                Self { p: self.p * to_fr(&k) }
            }

            fn __rmul__(&self, k: BigUint) -> Self {
                self.__mul__(k)
            }

            fn __eq__(&self, other: &Self) -> bool {
                self.p == other.p
            }

            fn __hash__(&self) -> u64 {
                let mut out = Vec::with_capacity($len);
                self.p.into_affine().serialize_compressed(&mut out).unwrap();
                out.iter().fold(0xcbf29ce484222325u64, |h, b| {
                    (h ^ (*b as u64)).wrapping_mul(0x100000001b3)
                })
            }

            fn __repr__(&self) -> String {
                let mut out = Vec::with_capacity($len);
                self.p.into_affine().serialize_compressed(&mut out).unwrap();
                let hex: String = out.iter().take(8).map(|b| format!("{b:02x}")).collect();
                format!("{}({hex}...)", stringify!($name))
            }
        }
    };
}

group_class!(G1, G1Projective, G1Affine, 48);
group_class!(G2, G2Projective, G2Affine, 96);

fn collect_scalars(scalars: &[BigUint]) -> Vec<Fr> {
    scalars.iter().map(to_fr).collect()
}

#[pyfunction]
fn g1_msm(py: Python<'_>, points: Vec<PyRef<'_, G1>>, scalars: Vec<BigUint>) -> PyResult<G1> {
    if points.len() != scalars.len() {
        return Err(PyValueError::new_err("points and scalars differ in length"));
    }
    let bases: Vec<G1Affine> = points.iter().map(|p| p.p.into_affine()).collect();
    let s = collect_scalars(&scalars);
    let p = py.detach(|| G1Projective::msm(&bases, &s).expect("lengths checked"));
    Ok(G1 { p })
}

#[pyfunction]
fn g2_msm(py: Python<'_>, points: Vec<PyRef<'_, G2>>, scalars: Vec<BigUint>) -> PyResult<G2> {
    if points.len() != scalars.len() {
        return Err(PyValueError::new_err("points and scalars differ in length"));
    }
    let bases: Vec<G2Affine> = points.iter().map(|p| p.p.into_affine()).collect();
    let s = collect_scalars(&scalars);
    let p = py.detach(|| G2Projective::msm(&bases, &s).expect("lengths checked"));
    Ok(G2 { p })
}

#[pyfunction]
fn g1_batch_mul(py: Python<'_>, base: &G1, scalars: Vec<BigUint>) -> Vec<G1> {
    let s = collect_scalars(&scalars);
    let b = base.p;
    py.detach(|| s.iter().map(|k| G1 { p: b * k }).collect())
}

#[pyfunction]
fn g2_batch_mul(py: Python<'_>, base: &G2, scalars: Vec<BigUint>) -> Vec<G2> {
    let s = collect_scalars(&scalars);
    let b = base.p;
    py.detach(|| s.iter().map(|k| G2 { p: b * k }).collect())
}

/// True iff the product of e(g1[i], g2[i]) is the identity of GT.
#[pyfunction]
fn pairing_check(py: Python<'_>, g1: Vec<PyRef<'_, G1>>, g2: Vec<PyRef<'_, G2>>) -> PyResult<bool> {
    if g1.len() != g2.len() {
        return Err(PyValueError::new_err("g1 and g2 differ in length"));
    }
    let a: Vec<G1Affine> = g1.iter().map(|p| p.p.into_affine()).collect();
    let b: Vec<G2Affine> = g2.iter().map(|p| p.p.into_affine()).collect();
    Ok(py.detach(|| Bls12_381::multi_pairing(a, b).is_zero()))
}

#[pymodule]
fn _curve_native(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<G1>()?;
    m.add_class::<G2>()?;
    m.add_function(wrap_pyfunction!(g1_msm, m)?)?;
    m.add_function(wrap_pyfunction!(g2_msm, m)?)?;
    m.add_function(wrap_pyfunction!(g1_batch_mul, m)?)?;
    m.add_function(wrap_pyfunction!(g2_batch_mul, m)?)?;
    m.add_function(wrap_pyfunction!(pairing_check, m)?)?;
    m.add("SCALAR_MODULUS", BigUint::from(Fr::MODULUS))?;
    Ok(())
}
