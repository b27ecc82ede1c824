use faer::c64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ptsym::hamiltonian::{BlockOperators, ModelKind, ModelSpec, PartnerMode};
use ptsym::pointgroup::{branch_oh_to_td, format_content, parse_orbit_pattern, GroupName, Irrep, PointGroup};
use ptsym::spectra::{self, ScanOptions, SweepGrid, CUTOFF_STEP, TOL_IM};
use ptsym::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Eigen(_) | Error::Asymmetric(_) | Error::Io(_) | Error::GroupConstruction(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn spec(model: &str, limit: u32, partners: &str) -> PyResult<ModelSpec> {
    let kind: ModelKind = model.parse().map_err(py_err)?;
    let partners: PartnerMode = partners.parse().map_err(py_err)?;
    Ok(ModelSpec::new(kind, 0.0, kind.truncation(limit))
        .map_err(py_err)?
        .with_partners(partners))
}

/// One located coalescence of two eigenvalue branches.
#[pyclass(name = "ExceptionalPoint", module = "ptsym_py", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyExceptionalPoint {
    irrep: String,
    branch_a: usize,
    branch_b: usize,
    g_c: f64,
    e_c: c64,
    refined: bool,
    unbracketed: bool,
    converged: Option<bool>,
    cutoff_shift: Option<f64>,
}

#[pymethods]
impl PyExceptionalPoint {
    fn __repr__(&self) -> String {
        let converged = match self.converged {
            Some(true) => "True",
            Some(false) => "False",
            None => "None",
        };
        format!(
            "ExceptionalPoint({} {}/{} g_c={:.6} E_c={:.6}{:+.2e}i converged={converged})",
            self.irrep, self.branch_a, self.branch_b, self.g_c, self.e_c.re, self.e_c.im
        )
    }
}

impl From<&spectra::ExceptionalPoint> for PyExceptionalPoint {
    fn from(ep: &spectra::ExceptionalPoint) -> Self {
        Self {
            irrep: ep.irrep.to_string(),
            branch_a: ep.branch_a,
            branch_b: ep.branch_b,
            g_c: ep.g_c,
            e_c: ep.e_c,
            refined: ep.refined,
            unbracketed: ep.unbracketed,
            converged: ep.converged,
            cutoff_shift: ep.cutoff_shift,
        }
    }
}

/// Symmetry-adapted Hamiltonian block `H0 + i g xyz` for one T_d irrep.
#[pyclass(name = "Block", module = "ptsym_py", frozen)]
struct PyBlock {
    model: ModelSpec,
    ops: BlockOperators,
}

#[pymethods]
impl PyBlock {
    #[new]
    #[pyo3(signature = (model, limit, irrep, partners = "single"))]
    fn new(model: &str, limit: u32, irrep: &str, partners: &str) -> PyResult<Self> {
        let model = spec(model, limit, partners)?;
        let irrep: Irrep = irrep.parse().map_err(py_err)?;
        let ops = BlockOperators::build(&model, irrep).map_err(py_err)?;
        Ok(Self { model, ops })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.ops.dim()
    }

    #[getter]
    fn irrep(&self) -> String {
        self.ops.irrep.to_string()
    }

    /// Eigenvalues at coupling `g`, sorted by real part.
    fn eigenvalues(&self, py: Python<'_>, g: f64) -> PyResult<Vec<c64>> {
        py.detach(|| spectra::solve_sorted(&self.ops, g)).map_err(py_err)
    }

    /// Dense matrix at coupling `g` as nested lists.
    fn matrix(&self, g: f64) -> Vec<Vec<c64>> {
        let m = self.ops.matrix(g);
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    }

    /// Sparse `row col re im` listing with its header line.
    fn dump(&self, g: f64) -> PyResult<String> {
        let mut buf = Vec::new();
        self.ops.block(g).write_dump(&mut buf).map_err(|e| py_err(e.into()))?;
        Ok(String::from_utf8(buf).expect("dump is ASCII"))
    }

    /// Sweeps `g`, tracks branches and refines exceptional points. With
    /// `check`, each point is re-located at a larger cutoff.
    #[pyo3(signature = (gmin = 0.0, gmax = 1.0, steps = 200, tol_im = TOL_IM, emax = None, check = true))]
    fn scan(
        &self,
        py: Python<'_>,
        gmin: f64,
        gmax: f64,
        steps: usize,
        tol_im: f64,
        emax: Option<f64>,
        check: bool,
    ) -> PyResult<Vec<PyExceptionalPoint>> {
        let grid = SweepGrid::new(gmin, gmax, steps).map_err(py_err)?;
        let options = ScanOptions {
            tol_im,
            ceiling: emax,
            ..ScanOptions::default()
        };
        let points = py
            .detach(|| {
                let big = if check {
                    let model = self.model.with_limit(self.model.truncation.limit() + CUTOFF_STEP);
                    Some(BlockOperators::build(&model, self.ops.irrep)?)
                } else {
                    None
                };
                spectra::scan_irrep(&self.ops, big.as_ref(), &grid, &options)
            })
            .map_err(py_err)?
            .points;
        Ok(points.iter().map(PyExceptionalPoint::from).collect())
    }

    fn __repr__(&self) -> String {
        format!("Block({} {} limit={} dim={})", self.model.kind, self.ops.irrep, self.model.truncation.limit(), self.dim())
    }
}

/// Lowest `count` eigenvalues of `p^2 + x^4` at basis cutoff `n_max`.
#[pyfunction]
fn quartic_1d_eigenvalues(n_max: usize, count: usize) -> PyResult<Vec<f64>> {
    ptsym::oscillator1d::quartic_1d_eigenvalues(n_max, count).map_err(py_err)
}

/// Irrep content of an orbit pattern such as `"2n,2m,2k+1"`.
#[pyfunction]
#[pyo3(signature = (orbit, group = "Td"))]
fn classify_orbit(orbit: &str, group: &str) -> PyResult<String> {
    let name: GroupName = group.parse().map_err(py_err)?;
    let g = PointGroup::build(name).map_err(py_err)?;
    let q = parse_orbit_pattern(orbit).map_err(py_err)?;
    Ok(format_content(&g.orbit_content(q)))
}

/// T_d label of an O_h irrep.
#[pyfunction]
fn branch(label: &str) -> PyResult<String> {
    let irrep: Irrep = label.parse().map_err(py_err)?;
    Ok(branch_oh_to_td(irrep).map_err(py_err)?.to_string())
}

/// Largest deviation between block and unreduced spectra at coupling `g`.
#[pyfunction]
fn oracle_deviation(model: &str, limit: u32, g: f64) -> PyResult<f64> {
    let m = spec(model, limit, "all")?.with_g(g).map_err(py_err)?;
    ptsym::checks::oracle_deviation(&m).map_err(py_err)
}

/// Energy below which spectra at this truncation are trusted.
#[pyfunction]
fn trusted_energy(model: &str, limit: u32) -> PyResult<f64> {
    let m = spec(model, limit, "single")?;
    spectra::trusted_energy(m.kind, m.truncation).map_err(py_err)
}

#[pymodule]
fn ptsym_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBlock>()?;
    m.add_class::<PyExceptionalPoint>()?;
    m.add_function(wrap_pyfunction!(quartic_1d_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(classify_orbit, m)?)?;
    m.add_function(wrap_pyfunction!(branch, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(trusted_energy, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
