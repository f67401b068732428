//! Binary snapshot format.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "CMLD" | version u32 = 1 | d u8 | side u32 | field_count u16
//! per field: name_len u16 | name (UTF-8) | kind u8 | [m u8 if kind == 2] | payload f64 ...
//! ```
//!
//! Kinds: 0 = one f64 per site, 1 = one f64 per bond (site-major, axis
//! fastest), 2 = `m` f64 coordinates per site. Sites are ordered with `x_1`
//! fastest.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{BondField, BondRole, Geometry, ScalarField};
use crate::error::{Error, Result, SnapshotError};

const MAGIC: [u8; 4] = *b"CMLD";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum FieldPayload {
    Site(Vec<f64>),
    Bond(Vec<f64>),
    Theta { components: u8, coords: Vec<f64> },
}

impl FieldPayload {
    fn kind(&self) -> u8 {
        match self {
            FieldPayload::Site(_) => 0,
            FieldPayload::Bond(_) => 1,
            FieldPayload::Theta { .. } => 2,
        }
    }

    fn data(&self) -> &[f64] {
        match self {
            FieldPayload::Site(v) | FieldPayload::Bond(v) => v,
            FieldPayload::Theta { coords, .. } => coords,
        }
    }

    fn expected_len(kind: u8, components: u8, g: Geometry) -> usize {
        match kind {
            0 => g.sites(),
            1 => g.bonds(),
            _ => g.sites() * components as usize,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedField {
    pub name: String,
    pub payload: FieldPayload,
}

/// An ordered collection of named fields on one geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    geometry: Geometry,
    fields: Vec<NamedField>,
}

impl Snapshot {
    pub fn new(geometry: Geometry) -> Self {
        Self { geometry, fields: Vec::new() }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn fields(&self) -> &[NamedField] {
        &self.fields
    }

    pub fn push(&mut self, name: impl Into<String>, payload: FieldPayload) -> Result<()> {
        let name = name.into();
        if name.len() > u16::MAX as usize {
            return Err(SnapshotError::Shape(format!("field name of {} bytes", name.len())).into());
        }
        let components = match &payload {
            FieldPayload::Theta { components, .. } if *components == 0 => {
                return Err(SnapshotError::Shape("theta field with zero components".into()).into())
            }
            FieldPayload::Theta { components, .. } => *components,
            _ => 1,
        };
        let want = FieldPayload::expected_len(payload.kind(), components, self.geometry);
        if payload.data().len() != want {
            return Err(Error::GeometryMismatch(format!(
                "field `{name}` has {} values, geometry needs {want}",
                payload.data().len()
            )));
        }
        if self.fields.len() == u16::MAX as usize {
            return Err(SnapshotError::Shape("too many fields".into()).into());
        }
        self.fields.push(NamedField { name, payload });
        Ok(())
    }

    pub fn push_site(&mut self, name: impl Into<String>, field: &ScalarField) -> Result<()> {
        super::field::ensure_same(self.geometry, field.geometry())?;
        self.push(name, FieldPayload::Site(field.values().to_vec()))
    }

    pub fn push_bond(&mut self, name: impl Into<String>, field: &BondField) -> Result<()> {
        super::field::ensure_same(self.geometry, field.geometry())?;
        self.push(name, FieldPayload::Bond(field.values().to_vec()))
    }

    pub fn get(&self, name: &str) -> Result<&FieldPayload> {
        self.fields
            .iter()
            .find(|f| f.name == name)
            .map(|f| &f.payload)
            .ok_or_else(|| SnapshotError::MissingField(name.to_owned()).into())
    }

    pub fn site_field(&self, name: &str) -> Result<ScalarField> {
        match self.get(name)? {
            FieldPayload::Site(v) => ScalarField::new(self.geometry, v.clone()),
            _ => Err(SnapshotError::Shape(format!("field `{name}` is not a site field")).into()),
        }
    }

    /// Bond fields carry no role on disk; the caller supplies it.
    pub fn bond_field(&self, name: &str, role: BondRole) -> Result<BondField> {
        match self.get(name)? {
            FieldPayload::Bond(v) => BondField::new(self.geometry, role, v.clone()),
            _ => Err(SnapshotError::Shape(format!("field `{name}` is not a bond field")).into()),
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let g = self.geometry;
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[g.dim() as u8])?;
        w.write_all(&(g.side() as u32).to_le_bytes())?;
        w.write_all(&(self.fields.len() as u16).to_le_bytes())?;
        for f in &self.fields {
            w.write_all(&(f.name.len() as u16).to_le_bytes())?;
            w.write_all(f.name.as_bytes())?;
            w.write_all(&[f.payload.kind()])?;
            if let FieldPayload::Theta { components, .. } = f.payload {
                w.write_all(&[components])?;
            }
            let mut buf = Vec::with_capacity(8 * f.payload.data().len());
            for v in f.payload.data() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self, SnapshotError> {
        let mut r = r;
        let magic: [u8; 4] = read_array(&mut r)?;
        if magic != MAGIC {
            return Err(SnapshotError::BadMagic(magic));
        }
        let version = u32::from_le_bytes(read_array(&mut r)?);
        if version != VERSION {
            return Err(SnapshotError::UnsupportedVersion(version));
        }
        let [dim] = read_array(&mut r)?;
        let side = u32::from_le_bytes(read_array(&mut r)?);
        let geometry = Geometry::new(dim as usize, side as usize)
            .map_err(|e| SnapshotError::Shape(e.to_string()))?;
        let count = u16::from_le_bytes(read_array(&mut r)?);
        let mut fields = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let len = u16::from_le_bytes(read_array(&mut r)?) as usize;
            let mut name = vec![0u8; len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| SnapshotError::InvalidName)?;
            let [kind] = read_array(&mut r)?;
            let components = match kind {
                0 | 1 => 1,
                2 => {
                    let [m] = read_array(&mut r)?;
                    if m == 0 {
                        return Err(SnapshotError::Shape(format!("theta field `{name}` with m = 0")));
                    }
                    m
                }
                other => return Err(SnapshotError::UnknownKind(other)),
            };
            let n = FieldPayload::expected_len(kind, components, geometry);
            let mut bytes = vec![0u8; 8 * n];
            r.read_exact(&mut bytes)?;
            let data: Vec<f64> = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect();
            let payload = match kind {
                0 => FieldPayload::Site(data),
                1 => FieldPayload::Bond(data),
                _ => FieldPayload::Theta { components, coords: data },
            };
            fields.push(NamedField { name, payload });
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(SnapshotError::Shape("trailing bytes after last field".into()));
        }
        Ok(Self { geometry, fields })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::read_from(BufReader::new(File::open(path)?))?)
    }
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N], SnapshotError> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::EnergyField;
    use proptest::prelude::*;

    fn roundtrip(s: &Snapshot) -> Snapshot {
        let mut bytes = Vec::new();
        s.write_to(&mut bytes).unwrap();
        Snapshot::read_from(bytes.as_slice()).unwrap()
    }

    #[test]
    fn zero_energy_roundtrip() {
        let g = Geometry::new(2, 4).unwrap();
        let mut s = Snapshot::new(g);
        s.push_site("E", &EnergyField::zeros(g)).unwrap();
        let back = roundtrip(&s);
        assert_eq!(back, s);
        assert_eq!(back.site_field("E").unwrap(), ScalarField::zeros(g));
    }

    #[test]
    fn order_and_names_kept() {
        let g = Geometry::new(1, 8).unwrap();
        let mut s = Snapshot::new(g);
        s.push_site("b", &ScalarField::constant(g, 1.0)).unwrap();
        s.push("theta", FieldPayload::Theta { components: 2, coords: vec![0.25; 16] }).unwrap();
        let back = roundtrip(&s);
        let names: Vec<_> = back.fields().iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["b", "theta"]);
    }

    #[test]
    fn tiny_values_exact() {
        let g = Geometry::new(1, 4).unwrap();
        let tiny = 2f64.powi(-52);
        let mut s = Snapshot::new(g);
        s.push_site("E", &ScalarField::constant(g, tiny)).unwrap();
        let back = roundtrip(&s);
        assert!(back.site_field("E").unwrap().values().iter().all(|v| *v == tiny));
    }

    #[test]
    fn corrupt_headers_are_structured() {
        let g = Geometry::new(1, 4).unwrap();
        let mut s = Snapshot::new(g);
        s.push_bond("c", &BondField::zeros(g, BondRole::Current)).unwrap();
        let mut bytes = Vec::new();
        s.write_to(&mut bytes).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Snapshot::read_from(bad.as_slice()), Err(SnapshotError::BadMagic(_))));

        let mut bad = bytes.clone();
        bad[4] = 7;
        assert!(matches!(
            Snapshot::read_from(bad.as_slice()),
            Err(SnapshotError::UnsupportedVersion(7))
        ));

        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(matches!(Snapshot::read_from(bad.as_slice()), Err(SnapshotError::Shape(_))));

        let kind_at = 4 + 4 + 1 + 4 + 2 + 2 + 1;
        let mut bad = bytes.clone();
        bad[kind_at] = 5;
        assert!(matches!(Snapshot::read_from(bad.as_slice()), Err(SnapshotError::UnknownKind(5))));

        let truncated = &bytes[..bytes.len() - 3];
        assert!(matches!(Snapshot::read_from(truncated), Err(SnapshotError::Io(_))));

        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(Snapshot::read_from(long.as_slice()), Err(SnapshotError::Shape(_))));
    }

    #[test]
    fn missing_field_and_wrong_length() {
        let g = Geometry::new(1, 4).unwrap();
        let mut s = Snapshot::new(g);
        assert!(s.push("x", FieldPayload::Site(vec![0.0; 3])).is_err());
        assert!(matches!(
            s.get("nope"),
            Err(Error::Snapshot(SnapshotError::MissingField(_)))
        ));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.cmld");
        let g = Geometry::new(3, 4).unwrap();
        let mut s = Snapshot::new(g);
        s.push_site("E", &ScalarField::from_fn(g, |x| x as f64 * 0.1)).unwrap();
        s.save(&path).unwrap();
        assert_eq!(Snapshot::load(&path).unwrap(), s);
    }

    proptest! {
        #[test]
        fn roundtrip_is_bitwise(bits in prop::collection::vec(any::<u64>(), 32)) {
            let g = Geometry::new(1, 16).unwrap();
            let vals: Vec<f64> = bits
                .iter()
                .map(|b| f64::from_bits(*b))
                .map(|v| if v.is_finite() { v } else { 0.5 })
                .collect();
            let mut s = Snapshot::new(g);
            s.push("site", FieldPayload::Site(vals[..16].to_vec())).unwrap();
            s.push("bond", FieldPayload::Bond(vals[16..].to_vec())).unwrap();
            let back = roundtrip(&s);
            for (a, b) in s.fields().iter().zip(back.fields()) {
                let xa: Vec<u64> = a.payload.data().iter().map(|v| v.to_bits()).collect();
                let xb: Vec<u64> = b.payload.data().iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(xa, xb);
            }
        }
    }
}
