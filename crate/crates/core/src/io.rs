//! Table and document serialization.
//!
//! Everything written here is deterministic: tables use Rust's shortest
//! round-trip float formatting in a fixed row order, JSON documents use
//! struct-declaration key order, and no timestamps or absolute paths appear
//! anywhere. Writing the same state twice produces byte-identical output.
//!
//! Formats:
//! - field CSV: header `j,n,species,value,tick`, one row per degree of
//!   freedom in flat (species-major) order;
//! - residual CSV: header `tick,residual`, one row per observed tick starting
//!   at 0;
//! - metric CSV: header `j,n,g_jj,g_nn,g_jn,g_xx,g_rr,g_xr`, one row per
//!   interior site.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::dynamics::DistributionField;
use crate::error::{Error, Result};
use crate::laplacian::DofIndex;
use crate::metric::{SiteMetric, SitePoincare};
use crate::network::{Network, NetworkConfig, Site, SiteState, SpeciesId};
use crate::scalar::Scalar;

/// Field CSV header.
pub const FIELD_CSV_HEADER: &str = "j,n,species,value,tick";
/// Residual-history CSV header.
pub const RESIDUAL_CSV_HEADER: &str = "tick,residual";
/// Metric CSV header.
pub const METRIC_CSV_HEADER: &str = "j,n,g_jj,g_nn,g_jn,g_xx,g_rr,g_xr";

/// Writes a distribution field as CSV in flat degree-of-freedom order.
pub fn write_field_csv<T: Scalar, W: Write>(
    w: &mut W,
    network: &Network,
    field: &DistributionField<T>,
) -> Result<()> {
    if field.dim() != network.dof_count() {
        return Err(Error::Dimension(format!(
            "field has {} values but the network has {} degrees of freedom",
            field.dim(),
            network.dof_count()
        )));
    }
    writeln!(w, "{FIELD_CSV_HEADER}")?;
    for species in SpeciesId::ALL {
        for site in network.sites() {
            let flat = network.flat_dof(DofIndex::new(site, species))?;
            writeln!(
                w,
                "{},{},{},{},{}",
                site.j,
                site.n,
                species.label(),
                field.values[flat],
                field.tick
            )?;
        }
    }
    Ok(())
}

/// One parsed row of a field CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRecord<T> {
    pub site: Site,
    pub species: SpeciesId,
    pub value: T,
    pub tick: u64,
}

fn parse_error(line: usize, what: impl std::fmt::Display) -> Error {
    Error::Parse(format!("field CSV line {line}: {what}"))
}

/// Reads the rows of a field CSV (any row order; validation against a
/// network happens in [`field_from_records`]).
pub fn read_field_csv<T: Scalar, R: BufRead>(reader: R) -> Result<Vec<FieldRecord<T>>> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(Error::Parse("field CSV is empty".into())),
    };
    if header.trim() != FIELD_CSV_HEADER {
        return Err(Error::Parse(format!(
            "field CSV header must be {FIELD_CSV_HEADER:?}, got {header:?}"
        )));
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let line_no = idx + 2;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(parse_error(
                line_no,
                format_args!("expected 5 columns, got {}", cols.len()),
            ));
        }
        let j: usize = cols[0]
            .parse()
            .map_err(|e| parse_error(line_no, format_args!("bad j {:?}: {e}", cols[0])))?;
        let n: usize = cols[1]
            .parse()
            .map_err(|e| parse_error(line_no, format_args!("bad n {:?}: {e}", cols[1])))?;
        let species = SpeciesId::from_label(cols[2])
            .map_err(|e| parse_error(line_no, e))?;
        let raw: f64 = cols[3]
            .parse()
            .map_err(|e| parse_error(line_no, format_args!("bad value {:?}: {e}", cols[3])))?;
        let value = T::from_f64(raw).ok_or_else(|| {
            parse_error(line_no, format_args!("value {raw} is not representable"))
        })?;
        let tick: u64 = cols[4]
            .parse()
            .map_err(|e| parse_error(line_no, format_args!("bad tick {:?}: {e}", cols[4])))?;
        records.push(FieldRecord {
            site: Site::new(j, n),
            species,
            value,
            tick,
        });
    }
    Ok(records)
}

/// Assembles records into a [`DistributionField`], requiring exactly one
/// record per degree of freedom and a single consistent tick.
pub fn field_from_records<T: Scalar>(
    network: &Network,
    records: &[FieldRecord<T>],
) -> Result<DistributionField<T>> {
    if records.is_empty() {
        return Err(Error::Parse("field CSV contains no data rows".into()));
    }
    let tick = records[0].tick;
    let dim = network.dof_count();
    let mut values = vec![T::zero(); dim];
    let mut seen = vec![false; dim];
    for record in records {
        if record.tick != tick {
            return Err(Error::Parse(format!(
                "field CSV mixes ticks {tick} and {}",
                record.tick
            )));
        }
        let flat = network
            .flat_dof(DofIndex::new(record.site, record.species))
            .map_err(|_| {
                Error::Parse(format!(
                    "field CSV references site j={}, n={} outside the network",
                    record.site.j, record.site.n
                ))
            })?;
        if seen[flat] {
            return Err(Error::Parse(format!(
                "field CSV repeats j={}, n={}, species {}",
                record.site.j,
                record.site.n,
                record.species.label()
            )));
        }
        seen[flat] = true;
        values[flat] = record.value;
    }
    let missing = seen.iter().filter(|s| !**s).count();
    if missing > 0 {
        return Err(Error::Parse(format!(
            "field CSV covers {} of {dim} degrees of freedom ({missing} missing)",
            dim - missing
        )));
    }
    Ok(DistributionField { values, tick })
}

/// Writes a residual history as CSV; row `k` holds the residual observed at
/// tick `k` (row 0 is the initial residual).
pub fn write_residual_csv<T: Scalar, W: Write>(w: &mut W, history: &[T]) -> Result<()> {
    writeln!(w, "{RESIDUAL_CSV_HEADER}")?;
    for (tick, residual) in history.iter().enumerate() {
        writeln!(w, "{tick},{residual}")?;
    }
    Ok(())
}

/// Writes lattice and Poincaré metric components side by side, one row per
/// interior site.
pub fn write_metric_csv<T: Scalar, W: Write>(
    w: &mut W,
    metric: &[SiteMetric<T>],
    poincare: &[SitePoincare<T>],
) -> Result<()> {
    if metric.len() != poincare.len() {
        return Err(Error::Dimension(format!(
            "metric table has {} rows but the Poincaré table has {}",
            metric.len(),
            poincare.len()
        )));
    }
    writeln!(w, "{METRIC_CSV_HEADER}")?;
    for (m, p) in metric.iter().zip(poincare) {
        if m.site != p.site {
            return Err(Error::Dimension(format!(
                "metric row for j={}, n={} does not match Poincaré row for j={}, n={}",
                m.site.j, m.site.n, p.site.j, p.site.n
            )));
        }
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            m.site.j,
            m.site.n,
            m.components.g_jj,
            m.components.g_nn,
            m.components.g_jn,
            p.components.g_xx,
            p.components.g_rr,
            p.components.g_xr
        )?;
    }
    Ok(())
}

/// Per-site entry of a [`NetworkDocument`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteDocument {
    pub j: usize,
    pub n: usize,
    pub state: SiteState,
    pub horizontal: Vec<Site>,
    pub radial_up: Vec<Site>,
    pub radial_down: Vec<Site>,
}

/// Serializable description of a built network: configuration, counts, and
/// per-site spin state plus adjacency.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkDocument {
    pub config: NetworkConfig,
    pub site_count: usize,
    pub dof_count: usize,
    pub pixel_area: usize,
    pub sites: Vec<SiteDocument>,
}

impl NetworkDocument {
    pub fn new(network: &Network) -> NetworkDocument {
        let sites = network
            .sites()
            .map(|site| {
                let state = network
                    .site_state(site)
                    .expect("sites() yields in-range sites");
                let hood = network
                    .neighbors(site)
                    .expect("sites() yields in-range sites");
                SiteDocument {
                    j: site.j,
                    n: site.n,
                    state,
                    horizontal: hood.horizontal,
                    radial_up: hood.radial_up,
                    radial_down: hood.radial_down,
                }
            })
            .collect();
        NetworkDocument {
            config: network.config().clone(),
            site_count: network.site_count(),
            dof_count: network.dof_count(),
            pixel_area: network.pixel_area(),
            sites,
        }
    }
}

/// Pretty JSON with a trailing newline; key order follows struct
/// declaration order, so equal values serialize byte-identically.
pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("JSON serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes [`to_json_pretty`] output to a writer.
pub fn write_json<T: Serialize, W: Write>(w: &mut W, value: &T) -> Result<()> {
    w.write_all(to_json_pretty(value)?.as_bytes())?;
    Ok(())
}
