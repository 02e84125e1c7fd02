//! TFLD: single-file container for fields, beam samples, averages and
//! reconstructions.
//!
//! Layout: magic `TFLD`, version `u16` LE, role `u8`, header length `u32` LE,
//! UTF-8 JSON header, then the payload as `f64` LE. The payload is
//! component-major; each component is a row-major array over the grid.
//! Beam samples store one component per direction; averages store the
//! components of ranks `0..=m` in order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::averaging::{AverageField, Provenance};
use crate::error::{Error, Result};
use crate::grid::{Grid, SymTensorField};
use crate::raytransform::{BeamSamples, RayWeight};
use crate::sphere::DirectionSet;
use crate::symtensor::component_count;

pub const MAGIC: &[u8; 4] = b"TFLD";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Field = 0,
    Beam = 1,
    Avg = 2,
    Recon = 3,
}

impl Role {
    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Role::Field),
            1 => Ok(Role::Beam),
            2 => Ok(Role::Avg),
            3 => Ok(Role::Recon),
            other => Err(Error::Format(format!("unknown role tag {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub n: usize,
    pub m: usize,
    pub sizes: Vec<usize>,
    pub lengths: Vec<f64>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    /// Number of stored component arrays in the payload.
    pub components: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<RayWeight>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
}

impl Header {
    fn for_grid(grid: &Grid, m: usize, components: usize) -> Self {
        Self {
            n: grid.dim(),
            m,
            sizes: grid.sizes.clone(),
            lengths: grid.lengths(),
            origin: grid.origin.clone(),
            spacing: grid.spacing.clone(),
            components,
            weight: None,
            s: None,
            ranks: None,
            provenance: None,
            directions: None,
            direction_weights: None,
            method: None,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.sizes.clone(), self.origin.clone(), self.spacing.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub role: Role,
    pub header: Header,
    pub payload: Vec<f64>,
}

impl Container {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = serde_json::to_vec(&self.header).map_err(|e| Error::Format(e.to_string()))?;
        let mut bytes = Vec::with_capacity(11 + header.len() + 8 * self.payload.len());
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&VERSION.to_le_bytes());
        bytes.push(self.role as u8);
        bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
        bytes.extend_from_slice(&header);
        for v in &self.payload {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 11 || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing TFLD magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let role = Role::from_tag(bytes[6])?;
        let hlen = u32::from_le_bytes([bytes[7], bytes[8], bytes[9], bytes[10]]) as usize;
        let body = &bytes[11..];
        if body.len() < hlen {
            return Err(Error::Format("truncated header".into()));
        }
        let header: Header = serde_json::from_slice(&body[..hlen]).map_err(|e| Error::Format(e.to_string()))?;
        let data = &body[hlen..];
        let nodes: usize = header.sizes.iter().product();
        let expected = nodes * header.components * 8;
        if data.len() != expected {
            return Err(Error::Format(format!(
                "payload has {} bytes, header implies {expected}",
                data.len()
            )));
        }
        let payload = data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(Self { role, header, payload })
    }

    pub fn write_file(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn read_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    fn expect_role(&self, roles: &[Role]) -> Result<()> {
        if roles.contains(&self.role) {
            Ok(())
        } else {
            Err(Error::Metadata(format!(
                "container role {:?} is not one of {roles:?}",
                self.role
            )))
        }
    }

    fn chunks(&self) -> Vec<Vec<f64>> {
        let nodes: usize = self.header.sizes.iter().product();
        self.payload.chunks(nodes.max(1)).map(|c| c.to_vec()).collect()
    }

    /// Container for a sampled field (`Field`) or reconstruction (`Recon`).
    pub fn from_field(field: &SymTensorField, role: Role, method: Option<&str>) -> Self {
        let mut header = Header::for_grid(&field.grid, field.order, field.components.len());
        header.method = method.map(str::to_string);
        Self {
            role,
            header,
            payload: field.components.concat(),
        }
    }

    pub fn to_field(&self) -> Result<SymTensorField> {
        self.expect_role(&[Role::Field, Role::Recon])?;
        SymTensorField::new(self.header.grid()?, self.header.m, self.chunks())
    }

    /// Beam samples on a source grid; one component per direction.
    pub fn from_beams(beams: &BeamSamples) -> Result<Self> {
        let grid = beams
            .source_grid
            .as_ref()
            .ok_or_else(|| Error::Metadata("beam samples need a source grid to be stored".into()))?;
        let nd = beams.directions.len();
        let mut header = Header::for_grid(grid, beams.order, nd);
        header.weight = Some(beams.weight);
        if let RayWeight::Fractional(s) = beams.weight {
            header.s = Some(s);
        }
        header.directions = Some(beams.directions.directions.clone());
        header.direction_weights = beams.directions.weights.clone();
        let payload = (0..nd).flat_map(|d| beams.direction_column(d)).collect();
        Ok(Self {
            role: Role::Beam,
            header,
            payload,
        })
    }

    pub fn to_beams(&self) -> Result<BeamSamples> {
        self.expect_role(&[Role::Beam])?;
        let grid = self.header.grid()?;
        let directions = DirectionSet {
            dim: self.header.n,
            directions: self
                .header
                .directions
                .clone()
                .ok_or_else(|| Error::Format("beam container lacks directions".into()))?,
            weights: self.header.direction_weights.clone(),
        };
        let weight = self
            .header
            .weight
            .ok_or_else(|| Error::Format("beam container lacks weight".into()))?;
        let columns = self.chunks();
        let nd = directions.len();
        if columns.len() != nd {
            return Err(Error::Format("direction count differs from payload".into()));
        }
        let nodes = grid.node_count();
        let mut values = vec![0.0; nodes * nd];
        for (d, col) in columns.iter().enumerate() {
            for (src, v) in col.iter().enumerate() {
                values[src * nd + d] = *v;
            }
        }
        Ok(BeamSamples {
            dim: self.header.n,
            order: self.header.m,
            weight,
            sources: grid.points(),
            source_grid: Some(grid),
            directions,
            values,
        })
    }

    pub fn from_averages(avg: &AverageField) -> Self {
        let grid = avg.grid();
        let count: usize = avg.ranks.iter().map(|r| r.components.len()).sum();
        let mut header = Header::for_grid(grid, avg.m, count);
        header.s = Some(avg.s);
        header.ranks = Some(avg.ranks.iter().map(|r| r.order).collect());
        header.provenance = Some(
            match avg.provenance {
                Provenance::Quadrature => "quadrature",
                Provenance::Spectral => "spectral",
                Provenance::Convolution => "convolution",
            }
            .to_string(),
        );
        let payload = avg.ranks.iter().flat_map(|r| r.components.concat()).collect();
        Self {
            role: Role::Avg,
            header,
            payload,
        }
    }

    pub fn to_averages(&self) -> Result<AverageField> {
        self.expect_role(&[Role::Avg])?;
        let grid = self.header.grid()?;
        let ranks = self
            .header
            .ranks
            .clone()
            .ok_or_else(|| Error::Format("average container lacks ranks".into()))?;
        let s = self
            .header
            .s
            .ok_or_else(|| Error::Format("average container lacks s".into()))?;
        let mut chunks = self.chunks().into_iter();
        let mut fields = Vec::new();
        for k in ranks {
            let comps: Vec<Vec<f64>> = chunks.by_ref().take(component_count(grid.dim(), k)).collect();
            fields.push(SymTensorField::new(grid.clone(), k, comps)?);
        }
        let provenance = match self.header.provenance.as_deref() {
            Some("spectral") => Provenance::Spectral,
            Some("convolution") => Provenance::Convolution,
            _ => Provenance::Quadrature,
        };
        Ok(AverageField {
            m: self.header.m,
            s,
            ranks: fields,
            provenance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_roundtrip_is_bit_exact() {
        let grid = Grid::cube(2, 4, 2.0).unwrap();
        let comps = vec![
            (0..16).map(|i| (i as f64).sin() / 3.0).collect(),
            (0..16).map(|i| -(i as f64) * 1e-300).collect(),
            vec![f64::MIN_POSITIVE; 16],
        ];
        let field = SymTensorField::new(grid, 2, comps).unwrap();
        let c = Container::from_field(&field, Role::Field, None);
        let mut bytes = Vec::new();
        c.write_to(&mut bytes).unwrap();
        let header_len = u32::from_le_bytes(bytes[7..11].try_into().unwrap()) as usize;
        assert_eq!(bytes.len(), 11 + header_len + 16 * 3 * 8);
        let back = Container::read_from(&bytes[..]).unwrap();
        assert_eq!(back.to_field().unwrap(), field);
        assert!(Container::read_from(&bytes[..bytes.len() - 1]).is_err());
        assert!(back.to_beams().is_err());
    }
}
