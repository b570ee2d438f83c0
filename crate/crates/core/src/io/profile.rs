//! Machine-profile files: one TOML section per axis, display units.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::FormatError;
use crate::params::{validate_profile, AxisParameters, FrictionParams, StaticLoadLaw, Violation};
use crate::units::AxisKind;

pub const PROFILE_FORMAT_VERSION: u32 = 1;

/// Name of the bundled profile.
pub const BUNDLED_NAME: &str = "mikron_ucp710";

/// Verbatim text of the bundled profile.
pub const BUNDLED_TEXT: &str = include_str!("../../../../profiles/mikron_ucp710.toml");

/// A named set of axes.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineProfile {
    pub machine: String,
    pub axes: Vec<AxisParameters>,
}

impl MachineProfile {
    pub fn axis(&self, name: &str) -> Option<&AxisParameters> {
        self.axes.iter().find(|a| a.name == name)
    }

    pub fn axis_mut(&mut self, name: &str) -> Option<&mut AxisParameters> {
        self.axes.iter_mut().find(|a| a.name == name)
    }

    /// Validates every axis; returns violations prefixed with the axis name.
    pub fn validate(&self) -> Result<(), Vec<(String, Violation)>> {
        let errs: Vec<_> = self
            .axes
            .iter()
            .flat_map(|a| {
                validate_profile(a)
                    .err()
                    .unwrap_or_default()
                    .into_iter()
                    .map(move |v| (a.name.clone(), v))
            })
            .collect();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

/// The bundled Mikron UCP 710 profile, parsed once.
pub fn bundled_profile() -> &'static MachineProfile {
    static PROFILE: OnceLock<MachineProfile> = OnceLock::new();
    PROFILE
        .get_or_init(|| parse_profile(BUNDLED_TEXT, BUNDLED_NAME).expect("bundled profile parses"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrictionRecord {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    i0: f64,
    v_fit_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisRecord {
    name: String,
    kind: AxisKind,
    j_eq: f64,
    k_p: f64,
    k_v: f64,
    t_v: f64,
    k_i: f64,
    t_i: f64,
    t_sp: f64,
    t_sv: f64,
    t_si: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    vffw: f64,
    tffw: f64,
    k_t: f64,
    k_e: f64,
    r_arm: f64,
    l_arm: f64,
    transmission: f64,
    #[serde(default)]
    static_load: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    static_load_law: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_voltage_limit")]
    voltage_limit: f64,
    #[serde(default = "default_current_limit")]
    current_limit: f64,
    friction: FrictionRecord,
}

fn default_voltage_limit() -> f64 {
    400.0
}

fn default_current_limit() -> f64 {
    30.0
}

const MS: f64 = 1e-3;
const US: f64 = 1e-6;
const MH: f64 = 1e-3;

impl AxisRecord {
    fn into_params(self) -> Result<AxisParameters, String> {
        let pos = self.kind.position_to_si();
        let law = match self.static_load_law {
            Some(points) => Some(
                StaticLoadLaw::new(points.iter().map(|p| (p[0] * pos, p[1])).collect())
                    .ok_or("static_load_law needs distinct finite positions")?,
            ),
            None => None,
        };
        Ok(AxisParameters {
            name: self.name,
            kind: self.kind,
            j_eq: self.j_eq,
            k_p: self.k_p * self.kind.position_gain_to_si(),
            k_v: self.k_v,
            t_v: self.t_v * MS,
            k_i: self.k_i,
            t_i: self.t_i * MS,
            t_sp: self.t_sp * MS,
            t_sv: self.t_sv * US,
            t_si: self.t_si * US,
            friction: FrictionParams {
                a: self.friction.a,
                b: self.friction.b,
                c: self.friction.c,
                d: self.friction.d,
                i0: self.friction.i0,
                v_fit_max: self.friction.v_fit_max,
            },
            alpha: self.alpha * MS,
            beta: self.beta * MS,
            gamma: self.gamma * MS,
            vffw: self.vffw,
            tffw: self.tffw,
            k_t: self.k_t,
            k_e: self.k_e,
            r_arm: self.r_arm,
            l_arm: self.l_arm * MH,
            transmission: self.transmission * pos,
            static_load: self.static_load,
            static_load_law: law,
            voltage_limit: self.voltage_limit,
            current_limit: self.current_limit,
        })
    }

    fn from_params(p: &AxisParameters) -> Self {
        let pos = p.kind.position_to_si();
        AxisRecord {
            name: p.name.clone(),
            kind: p.kind,
            j_eq: p.j_eq,
            k_p: p.k_p / p.kind.position_gain_to_si(),
            k_v: p.k_v,
            t_v: p.t_v / MS,
            k_i: p.k_i,
            t_i: p.t_i / MS,
            t_sp: p.t_sp / MS,
            t_sv: p.t_sv / US,
            t_si: p.t_si / US,
            alpha: p.alpha / MS,
            beta: p.beta / MS,
            gamma: p.gamma / MS,
            vffw: p.vffw,
            tffw: p.tffw,
            k_t: p.k_t,
            k_e: p.k_e,
            r_arm: p.r_arm,
            l_arm: p.l_arm / MH,
            transmission: p.transmission / pos,
            static_load: p.static_load,
            static_load_law: p
                .static_load_law
                .as_ref()
                .map(|l| l.points().iter().map(|&(x, t)| [x / pos, t]).collect()),
            voltage_limit: p.voltage_limit,
            current_limit: p.current_limit,
            friction: FrictionRecord {
                a: p.friction.a,
                b: p.friction.b,
                c: p.friction.c,
                d: p.friction.d,
                i0: p.friction.i0,
                v_fit_max: p.friction.v_fit_max,
            },
        }
    }
}

/// Parses profile text. `origin` names the source in error messages.
pub fn parse_profile(text: &str, origin: &str) -> Result<MachineProfile, FormatError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| FormatError::from_toml(origin, text, &e))?;
    let version = table
        .get("format_version")
        .and_then(|v| v.as_integer())
        .ok_or_else(|| FormatError::new(origin, None, "missing integer `format_version`"))?;
    if version != PROFILE_FORMAT_VERSION as i64 {
        return Err(FormatError::new(
            origin,
            None,
            format!("unsupported format_version {version} (expected {PROFILE_FORMAT_VERSION})"),
        ));
    }
    let machine = table
        .get("machine")
        .and_then(|v| v.as_str())
        .unwrap_or("unnamed")
        .to_string();
    let mut axes = Vec::new();
    for (key, value) in &table {
        if key == "format_version" || key == "machine" {
            continue;
        }
        let record: AxisRecord = value.clone().try_into().map_err(|e: toml::de::Error| {
            FormatError::new(origin, None, format!("axis [{key}]: {}", e.message()))
        })?;
        if record.name != *key {
            return Err(FormatError::new(
                origin,
                None,
                format!("axis section [{key}] has name = \"{}\"", record.name),
            ));
        }
        let params = record
            .into_params()
            .map_err(|m| FormatError::new(origin, None, format!("axis [{key}]: {m}")))?;
        axes.push(params);
    }
    if axes.is_empty() {
        return Err(FormatError::new(origin, None, "profile defines no axis"));
    }
    Ok(MachineProfile { machine, axes })
}

/// Serializes a profile in the file format (display units).
pub fn profile_to_string(p: &MachineProfile) -> String {
    let mut table = toml::Table::new();
    table.insert(
        "format_version".into(),
        toml::Value::Integer(PROFILE_FORMAT_VERSION as i64),
    );
    table.insert("machine".into(), toml::Value::String(p.machine.clone()));
    for axis in &p.axes {
        let value =
            toml::Value::try_from(AxisRecord::from_params(axis)).expect("axis record serializes");
        table.insert(axis.name.clone(), value);
    }
    toml::to_string(&table).expect("profile table serializes")
}

/// Loads a profile from a path, or the bundled profile by name.
pub fn load_profile(name_or_path: &str) -> Result<MachineProfile, super::IoError> {
    if name_or_path == BUNDLED_NAME {
        return Ok(bundled_profile().clone());
    }
    let path = Path::new(name_or_path);
    let text = std::fs::read_to_string(path).map_err(|e| super::IoError::io(path, e))?;
    Ok(parse_profile(&text, &path.display().to_string())?)
}

/// Names of the profiles shipped with the crate.
pub fn bundled_names() -> &'static [&'static str] {
    &[BUNDLED_NAME]
}
