//! JSON file formats for sets, subspaces and colorings.
//!
//! Every artifact carries `"schema": "f2lab/1"`. Sets come in two
//! encodings:
//!
//! * `points`: `data` is a list of digit vectors `[x_0, …, x_{n-1}]`;
//! * `hexmask`: `data` is a hex dump of the little-endian membership
//!   bitmap (bit `j` of byte `k` is element `8k + j`).

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::coloring::{Coloring, ColoringDomain};
use crate::error::{Error, Result};
use crate::group::{GroupSpec, Point};
use crate::set::GroupSet;
use crate::subspace::Subspace;

pub const SCHEMA: &str = "f2lab/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetEncoding {
    Hexmask,
    Points,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetFile {
    schema: String,
    p: u64,
    n: u32,
    encoding: SetEncoding,
    data: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubspaceFile {
    schema: String,
    p: u64,
    n: u32,
    basis: Vec<Vec<u8>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ColoringFile {
    schema: String,
    p: u64,
    n: u32,
    r: u8,
    domain: String,
    colors: Vec<u8>,
}

fn check_schema(s: &str) -> Result<()> {
    if s != SCHEMA {
        return Err(Error::Format(format!("field `schema`: expected {SCHEMA:?}, found {s:?}")));
    }
    Ok(())
}

fn spec_of(p: u64, n: u32) -> Result<GroupSpec> {
    let p32 = u32::try_from(p).map_err(|_| Error::NotPrime(p))?;
    GroupSpec::new(p32, n)
}

fn point_from_digits(spec: GroupSpec, digits: &[u8], what: &str) -> Result<Point> {
    if digits.len() != spec.n() as usize {
        return Err(Error::Format(format!(
            "{what}: expected {} digits, found {}",
            spec.n(),
            digits.len()
        )));
    }
    if let Some(&d) = digits.iter().find(|&&d| d as u32 >= spec.p()) {
        return Err(Error::range("digit", format!("{what}: digit {d} is not below p = {}", spec.p())));
    }
    spec.from_digits(digits)
}

fn hex_encode(set: &GroupSet) -> String {
    let bytes = set.spec().order().div_ceil(8) as usize;
    let mut out = String::with_capacity(2 * bytes);
    for k in 0..bytes {
        let byte = (set.words()[k / 8] >> (8 * (k % 8))) as u8;
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

fn hex_decode(spec: GroupSpec, s: &str) -> Result<GroupSet> {
    let bytes = spec.order().div_ceil(8) as usize;
    if s.len() != 2 * bytes {
        return Err(Error::Format(format!(
            "field `data`: mask length mismatch: expected {} hex digits for F_{}^{}, found {}",
            2 * bytes,
            spec.p(),
            spec.n(),
            s.len()
        )));
    }
    let mut words = vec![0u64; spec.order().div_ceil(64) as usize];
    for k in 0..bytes {
        let byte = u8::from_str_radix(&s[2 * k..2 * k + 2], 16)
            .map_err(|_| Error::Format(format!("field `data`: bad hex at offset {}", 2 * k)))?;
        words[k / 8] |= (byte as u64) << (8 * (k % 8));
    }
    GroupSet::from_words(spec, words)
        .map_err(|_| Error::Format("field `data`: mask has bits set beyond the group order".into()))
}

/// Canonical JSON text of a set.
pub fn set_to_json(set: &GroupSet, encoding: SetEncoding) -> String {
    let spec = set.spec();
    let data = match encoding {
        SetEncoding::Hexmask => serde_json::Value::String(hex_encode(set)),
        SetEncoding::Points => set.iter().map(|x| spec.digits(x)).collect::<Vec<_>>().into(),
    };
    let file = SetFile {
        schema: SCHEMA.into(),
        p: spec.p() as u64,
        n: spec.n(),
        encoding,
        data,
    };
    let mut text = serde_json::to_string_pretty(&file).expect("set serialises");
    text.push('\n');
    text
}

/// Parses a set file in either encoding.
pub fn parse_set_str(text: &str) -> Result<GroupSet> {
    let file: SetFile = serde_json::from_str(text)?;
    check_schema(&file.schema)?;
    let spec = spec_of(file.p, file.n)?;
    match file.encoding {
        SetEncoding::Hexmask => {
            let s = file
                .data
                .as_str()
                .ok_or_else(|| Error::Format("field `data`: hexmask must be a string".into()))?;
            hex_decode(spec, s)
        }
        SetEncoding::Points => {
            let list: Vec<Vec<u8>> = serde_json::from_value(file.data)
                .map_err(|e| Error::Format(format!("field `data`: expected a list of digit vectors: {e}")))?;
            let mut out = GroupSet::empty(spec);
            for (i, digits) in list.iter().enumerate() {
                out.insert(point_from_digits(spec, digits, &format!("data[{i}]"))?)?;
            }
            Ok(out)
        }
    }
}

pub fn read_set_file(path: &Path) -> Result<GroupSet> {
    parse_set_str(&fs::read_to_string(path)?)
}

pub fn write_set_file(path: &Path, set: &GroupSet, encoding: SetEncoding) -> Result<()> {
    write_atomic(path, set_to_json(set, encoding).as_bytes())
}

/// Embedded form of a set inside reports: the hexmask encoding without the schema tag.
impl Serialize for GroupSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let spec = self.spec();
        let mut st = s.serialize_struct("GroupSet", 4)?;
        st.serialize_field("p", &spec.p())?;
        st.serialize_field("n", &spec.n())?;
        st.serialize_field("encoding", &SetEncoding::Hexmask)?;
        st.serialize_field("data", &hex_encode(self))?;
        st.end()
    }
}

impl Serialize for Subspace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let spec = self.spec();
        let mut st = s.serialize_struct("Subspace", 3)?;
        st.serialize_field("p", &spec.p())?;
        st.serialize_field("n", &spec.n())?;
        let basis: Vec<Vec<u8>> = self.basis().iter().map(|&b| spec.digits(b)).collect();
        st.serialize_field("basis", &basis)?;
        st.end()
    }
}

pub fn subspace_to_json(v: &Subspace) -> String {
    let spec = v.spec();
    let file = SubspaceFile {
        schema: SCHEMA.into(),
        p: spec.p() as u64,
        n: spec.n(),
        basis: v.basis().iter().map(|&b| spec.digits(b)).collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("subspace serialises");
    text.push('\n');
    text
}

/// Parses a subspace file; the basis may be any spanning list.
pub fn parse_subspace_str(text: &str) -> Result<Subspace> {
    let file: SubspaceFile = serde_json::from_str(text)?;
    check_schema(&file.schema)?;
    let spec = spec_of(file.p, file.n)?;
    let vs = file
        .basis
        .iter()
        .enumerate()
        .map(|(i, d)| point_from_digits(spec, d, &format!("basis[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    Subspace::span(spec, &vs)
}

pub fn read_subspace_file(path: &Path) -> Result<Subspace> {
    parse_subspace_str(&fs::read_to_string(path)?)
}

pub fn write_subspace_file(path: &Path, v: &Subspace) -> Result<()> {
    write_atomic(path, subspace_to_json(v).as_bytes())
}

/// Colors are listed in increasing order of the domain's canonical points.
pub fn coloring_to_json(c: &Coloring) -> String {
    let spec = c.spec();
    let file = ColoringFile {
        schema: SCHEMA.into(),
        p: spec.p() as u64,
        n: spec.n(),
        r: c.r(),
        domain: match c.domain() {
            ColoringDomain::Projective => "projective",
            ColoringDomain::Points => "points",
        }
        .into(),
        colors: c.to_list(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("coloring serialises");
    text.push('\n');
    text
}

pub fn parse_coloring_str(text: &str) -> Result<Coloring> {
    let file: ColoringFile = serde_json::from_str(text)?;
    check_schema(&file.schema)?;
    let spec = spec_of(file.p, file.n)?;
    let domain = match file.domain.as_str() {
        "projective" => ColoringDomain::Projective,
        "points" => ColoringDomain::Points,
        other => return Err(Error::Format(format!("field `domain`: unknown value {other:?}"))),
    };
    Coloring::from_list(spec, file.r, domain, &file.colors)
}

/// Writes `bytes` to a temporary file next to `path`, then renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Format(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_points_list_is_empty_set() {
        let text = r#"{"schema":"f2lab/1","p":2,"n":3,"encoding":"points","data":[]}"#;
        assert!(parse_set_str(text).unwrap().is_empty());
    }

    #[test]
    fn hexmask_layout() {
        let g = GroupSpec::binary(4).unwrap();
        let s = GroupSet::from_points(g, [0, 9, 15]).unwrap();
        let text = set_to_json(&s, SetEncoding::Hexmask);
        assert!(text.contains("\"0182\""));
        assert_eq!(parse_set_str(&text).unwrap(), s);
    }

    #[test]
    fn rejects_malformed_sets() {
        let stray = r#"{"schema":"f2lab/1","p":2,"n":2,"encoding":"hexmask","data":"f1"}"#;
        assert!(matches!(parse_set_str(stray), Err(Error::Format(m)) if m.contains("beyond")));
        let short = r#"{"schema":"f2lab/1","p":2,"n":4,"encoding":"hexmask","data":"ff"}"#;
        assert!(matches!(parse_set_str(short), Err(Error::Format(m)) if m.contains("length mismatch")));
        let not_prime = r#"{"schema":"f2lab/1","p":4,"n":2,"encoding":"points","data":[]}"#;
        assert!(matches!(parse_set_str(not_prime), Err(Error::NotPrime(4))));
        let digit = r#"{"schema":"f2lab/1","p":3,"n":2,"encoding":"points","data":[[1,3]]}"#;
        assert!(matches!(parse_set_str(digit), Err(Error::OutOfRange { what: "digit", .. })));
        let schema = r#"{"schema":"other","p":2,"n":2,"encoding":"points","data":[]}"#;
        assert!(matches!(parse_set_str(schema), Err(Error::Format(_))));
        assert!(matches!(parse_set_str("{"), Err(Error::Json(_))));
    }

    #[test]
    fn subspace_and_coloring_round_trip() {
        let g = GroupSpec::new(3, 3).unwrap();
        let v = Subspace::span(g, &[5, 13]).unwrap();
        let text = subspace_to_json(&v);
        assert_eq!(parse_subspace_str(&text).unwrap(), v);
        let c = Coloring::from_fn(g, 3, ColoringDomain::Projective, |x| (x % 3) as u8 + 1).unwrap();
        assert_eq!(parse_coloring_str(&coloring_to_json(&c)).unwrap(), c);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("f2lab-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("set.json");
        let g = GroupSpec::binary(3).unwrap();
        write_set_file(&path, &GroupSet::full(g), SetEncoding::Points).unwrap();
        write_set_file(&path, &GroupSet::empty(g), SetEncoding::Points).unwrap();
        assert!(read_set_file(&path).unwrap().is_empty());
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }

    proptest! {
        #[test]
        fn encodings_round_trip(p in prop::sample::select(vec![2u32, 3, 5]), n in 1u32..5, seed: u64) {
            let g = GroupSpec::new(p, n).unwrap();
            let s = GroupSet::from_predicate(g, |x| (x.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ seed) >> 63 == 1);
            for enc in [SetEncoding::Points, SetEncoding::Hexmask] {
                let text = set_to_json(&s, enc);
                let back = parse_set_str(&text).unwrap();
                prop_assert_eq!(&back, &s);
                prop_assert_eq!(set_to_json(&back, enc), text);
            }
            let other = parse_set_str(&set_to_json(&s, SetEncoding::Points)).unwrap();
            prop_assert_eq!(set_to_json(&other, SetEncoding::Hexmask), set_to_json(&s, SetEncoding::Hexmask));
        }
    }
}
