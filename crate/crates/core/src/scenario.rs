//! TOML scenario files.
//!
//! ```toml
//! [closed_factor]
//! kind = "sphere"
//! dim = 2
//! normalize_volume = true
//!
//! [flat_factor]
//! preset = "torus2"          # or group = "klein.json", or inline lattice/holonomy
//!
//! [collapse]
//! basis = [["1", "0"]]       # or mode = "auto" / mode = "none"
//!
//! [scan]
//! t_min = 0.1
//! t_max = 1.0
//! steps = 90
//! precision_bits = 128
//!
//! [tower]
//! lambda = "1"
//! degrees = [2, 2, 2]
//! ```
//!
//! Lattice and group data must be rational strings; scan endpoints may be
//! decimal floats and are read as the decimal they print as.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bifurcation::{Direction, Scenario};
use crate::crystal::{presets, AffineMap, CollapseFamily, CrystalGroup};
use crate::error::{Error, Result};
use crate::exact::rational::{self, int, Rational};
use crate::exact::{Certifier, ExactReal};
use crate::lattice::{parse_matrix, Lattice};
use crate::spectral::{ClosedFactor, SpectrumEntry, SpectrumSlice};
use crate::tower::ProductMetricData;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub direction: Direction,
    pub closed_factor: ClosedFactorSpec,
    pub flat_factor: FlatFactorSpec,
    #[serde(default)]
    pub collapse: Option<CollapseSpec>,
    pub scan: Option<ScanSpec>,
    pub tower: Option<TowerSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClosedFactorSpec {
    Sphere {
        dim: usize,
        #[serde(default)]
        normalize_volume: bool,
        #[serde(default)]
        radius: Option<String>,
    },
    Custom {
        dim: usize,
        scal: String,
        volume: String,
        cutoff: String,
        spectrum: Vec<CustomEntry>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomEntry {
    pub eigenvalue: String,
    pub multiplicity: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatFactorSpec {
    #[serde(default)]
    pub preset: Option<String>,
    /// Path to a group JSON file, relative to the scenario file.
    #[serde(default)]
    pub group: Option<String>,
    #[serde(default)]
    pub lattice: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub holonomy: Option<Vec<InlineMap>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineMap {
    pub linear: Vec<Vec<String>>,
    pub translation: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseSpec {
    #[serde(default)]
    pub mode: Option<String>,
    /// Spanning vectors of the slow subspace `E`, as rational strings.
    #[serde(default)]
    pub basis: Option<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Number {
    pub fn to_rational(&self) -> Result<Rational> {
        match self {
            Number::Float(x) => rational::from_f64_decimal(*x),
            Number::Int(n) => Ok(int(*n)),
            Number::Text(s) => rational::parse_rational(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub t_min: Number,
    pub t_max: Number,
    pub steps: usize,
    #[serde(default = "default_bits")]
    pub precision_bits: u32,
}

fn default_bits() -> u32 {
    128
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerSpec {
    #[serde(default = "default_lambda")]
    pub lambda: String,
    #[serde(default)]
    pub degrees: Vec<u64>,
}

fn default_lambda() -> String {
    "1".into()
}

/// A resolved scenario.
#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub name: String,
    pub closed: ClosedFactor,
    pub group: CrystalGroup,
    pub collapse: Option<CollapseFamily>,
    pub direction: Direction,
    pub scan: Option<ScanParams>,
    pub tower: Option<TowerParams>,
    pub precision_bits: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanParams {
    pub t_min: Rational,
    pub t_max: Rational,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerParams {
    pub lambda: ExactReal,
    pub degrees: Vec<u64>,
}

fn parse_exact(s: &str, what: &str) -> Result<ExactReal> {
    s.parse().map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn closed_factor(spec: &ClosedFactorSpec, cert: &Certifier) -> Result<ClosedFactor> {
    match spec {
        ClosedFactorSpec::Sphere { dim, normalize_volume, radius } => match (normalize_volume, radius) {
            (true, Some(_)) => Err(Error::InvalidInput("closed_factor: give either normalize_volume or radius".into())),
            (true, None) => ClosedFactor::unit_volume_sphere(*dim),
            (false, r) => ClosedFactor::sphere(*dim, parse_exact(r.as_deref().unwrap_or("1"), "closed_factor.radius")?),
        },
        ClosedFactorSpec::Custom { dim, scal, volume, cutoff, spectrum } => {
            let entries = spectrum
                .iter()
                .map(|e| Ok(SpectrumEntry { value: parse_exact(&e.eigenvalue, "closed_factor.spectrum")?, multiplicity: e.multiplicity }))
                .collect::<Result<Vec<_>>>()?;
            let slice = SpectrumSlice {
                entries,
                cutoff: parse_exact(cutoff, "closed_factor.cutoff")?,
                source: "custom".into(),
                certificate: "user supplied".into(),
            };
            ClosedFactor::custom(*dim, parse_exact(scal, "closed_factor.scal")?, parse_exact(volume, "closed_factor.volume")?, slice, cert)
        }
    }
}

fn flat_group(spec: &FlatFactorSpec, base: &Path) -> Result<CrystalGroup> {
    let given = [spec.preset.is_some(), spec.group.is_some(), spec.lattice.is_some()].iter().filter(|&&b| b).count();
    if given != 1 {
        return Err(Error::InvalidInput("flat_factor needs exactly one of preset, group, lattice".into()));
    }
    if let Some(name) = &spec.preset {
        return presets::by_name(name).ok_or_else(|| Error::InvalidInput(format!("unknown preset '{name}'; known: {}", presets::NAMES.join(", "))));
    }
    if let Some(file) = &spec.group {
        let path: PathBuf = base.join(file);
        return CrystalGroup::read(&path);
    }
    let lattice = Lattice::new(parse_matrix(spec.lattice.as_ref().unwrap())?)?;
    let d = lattice.dim();
    let holonomy = match &spec.holonomy {
        None => vec![AffineMap::identity(d)],
        Some(maps) => maps
            .iter()
            .map(|m| {
                let t = m.translation.iter().map(|s| rational::parse_rational(s)).collect::<Result<Vec<_>>>()?;
                AffineMap::new(parse_matrix(&m.linear)?, t)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    CrystalGroup::new(lattice, holonomy)
}

fn collapse(spec: &Option<CollapseSpec>, group: &CrystalGroup) -> Result<Option<CollapseFamily>> {
    let Some(spec) = spec else { return Ok(None) };
    match (spec.mode.as_deref(), &spec.basis) {
        (Some("none"), None) => Ok(None),
        (Some("auto"), None) => Ok(Some(CollapseFamily::auto(group.clone())?)),
        (None, Some(basis)) => {
            let vs = basis
                .iter()
                .map(|v| v.iter().map(|s| rational::parse_rational(s)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            Ok(Some(CollapseFamily::from_basis(group.clone(), &vs)?))
        }
        _ => Err(Error::InvalidInput("collapse needs mode = \"auto\" | \"none\" or a basis".into())),
    }
}

impl LoadedScenario {
    /// Parses TOML; relative group paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_file(&file, base)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut s = Self::from_toml(&text, base)?;
        if s.name.is_empty() {
            s.name = path.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(s)
    }

    pub fn from_file(file: &ScenarioFile, base: &Path) -> Result<Self> {
        let precision_bits = file.scan.as_ref().map(|s| s.precision_bits).unwrap_or(128);
        if precision_bits < 64 {
            return Err(Error::InvalidInput(format!("precision_bits must be at least 64, got {precision_bits}")));
        }
        let cert = Certifier::new(precision_bits);
        let closed = closed_factor(&file.closed_factor, &cert)?;
        let group = flat_group(&file.flat_factor, base)?;
        let collapse = collapse(&file.collapse, &group)?;
        let scan = match &file.scan {
            None => None,
            Some(s) => Some(ScanParams { t_min: s.t_min.to_rational()?, t_max: s.t_max.to_rational()?, steps: s.steps }),
        };
        let tower = match &file.tower {
            None => None,
            Some(t) => Some(TowerParams { lambda: parse_exact(&t.lambda, "tower.lambda")?, degrees: t.degrees.clone() }),
        };
        Ok(LoadedScenario {
            name: file.name.clone().unwrap_or_default(),
            closed,
            group,
            collapse,
            direction: file.direction,
            scan,
            tower,
            precision_bits,
        })
    }

    /// Checks the unit-volume hypotheses and builds the index model.
    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::new(self.closed.clone(), self.group.clone(), self.collapse.clone(), self.direction, self.precision_bits)
    }

    /// Product data for covering towers of the flat factor.
    pub fn product_data(&self, lambda: Option<&ExactReal>) -> Result<ProductMetricData> {
        let lambda = match (lambda, &self.tower) {
            (Some(l), _) => l.clone(),
            (None, Some(t)) => t.lambda.clone(),
            (None, None) => ExactReal::one(),
        };
        let vol_h = self.group.lattice().covolume() / int(self.group.holonomy_order() as i64);
        Ok(ProductMetricData {
            scal_g: self.closed.scal.clone(),
            vol_g: self.closed.volume.clone(),
            dim_m: self.closed.dim,
            scal_h: ExactReal::zero(),
            vol_h: ExactReal::from_rational(vol_h),
            dim_f: self.group.dim(),
            lambda,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::rat;

    const FLAGSHIP: &str = r#"
name = "flagship"
[closed_factor]
kind = "sphere"
dim = 2
normalize_volume = true
[flat_factor]
preset = "torus2"
[collapse]
basis = [["1", "0"]]
[scan]
t_min = 0.1
t_max = 1.0
steps = 90
precision_bits = 128
[tower]
lambda = "1"
degrees = [2, 2, 2]
"#;

    #[test]
    fn parses_flagship() {
        let s = LoadedScenario::from_toml(FLAGSHIP, Path::new(".")).unwrap();
        let scan = s.scan.clone().unwrap();
        assert_eq!(scan.t_min, rat(1, 10));
        assert_eq!(scan.t_max, int(1));
        assert_eq!(s.tower.as_ref().unwrap().degrees, vec![2, 2, 2]);
        let sc = s.scenario().unwrap();
        assert_eq!(sc.threshold().to_string(), "8/3*pi");
        assert_eq!(s.product_data(None).unwrap().vol_h, ExactReal::one());
    }

    #[test]
    fn inline_group_and_rejections() {
        let inline = FLAGSHIP.replace("preset = \"torus2\"", "lattice = [[\"2\", \"0\"], [\"0\", \"1\"]]\nholonomy = [{ linear = [[\"1\",\"0\"],[\"0\",\"1\"]], translation = [\"0\",\"0\"] }, { linear = [[\"1\",\"0\"],[\"0\",\"-1\"]], translation = [\"1\",\"0\"] }]");
        let s = LoadedScenario::from_toml(&inline, Path::new(".")).unwrap();
        assert_eq!(s.group.holonomy_order(), 2);
        assert!(s.scenario().is_ok());
        let low = FLAGSHIP.replace("precision_bits = 128", "precision_bits = 32");
        assert!(LoadedScenario::from_toml(&low, Path::new(".")).is_err());
        let float_basis = FLAGSHIP.replace("[[\"1\", \"0\"]]", "[[1.0, 0.0]]");
        assert!(LoadedScenario::from_toml(&float_basis, Path::new(".")).is_err());
        let unnormalized = FLAGSHIP.replace("normalize_volume = true", "normalize_volume = false");
        assert!(LoadedScenario::from_toml(&unnormalized, Path::new(".")).unwrap().scenario().is_err());
        let missing = FLAGSHIP.replace("preset = \"torus2\"", "group = \"no-such-file.json\"");
        assert!(LoadedScenario::from_toml(&missing, Path::new(".")).is_err());
    }

    #[test]
    fn custom_closed_factor() {
        let custom = FLAGSHIP.replace(
            "kind = \"sphere\"\ndim = 2\nnormalize_volume = true",
            "kind = \"custom\"\ndim = 2\nscal = \"8*pi\"\nvolume = \"1\"\ncutoff = \"30\"\nspectrum = [{ eigenvalue = \"0\", multiplicity = 1 }, { eigenvalue = \"8*pi\", multiplicity = 3 }]",
        );
        let s = LoadedScenario::from_toml(&custom, Path::new(".")).unwrap().scenario().unwrap();
        assert_eq!(crate::bifurcation::index_at(&s, &rat(1, 5)).unwrap().index, 5);
    }
}
