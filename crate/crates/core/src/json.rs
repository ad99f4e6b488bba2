//! Serialization helpers. Exact integers that do not fit in 64 bits are written
//! as decimal strings so that JSON consumers never silently lose precision.

use serde::ser::{SerializeSeq, Serializer};

pub fn exact<S: Serializer>(x: &i128, s: S) -> Result<S::Ok, S::Error> {
    match i64::try_from(*x) {
        Ok(small) => s.serialize_i64(small),
        Err(_) => s.serialize_str(&x.to_string()),
    }
}

pub fn exact_opt<S: Serializer>(x: &Option<i128>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => exact(v, s),
        None => s.serialize_none(),
    }
}

struct Exact<'a>(&'a i128);

impl serde::Serialize for Exact<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        exact(self.0, s)
    }
}

struct ExactSlice<'a>(&'a [i128]);

impl serde::Serialize for ExactSlice<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        exact_vec(self.0, s)
    }
}

pub fn exact_vec<S: Serializer>(xs: &[i128], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&Exact(x))?;
    }
    seq.end()
}

pub fn exact_rows<S: Serializer>(rows: &[Vec<i128>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for row in rows {
        seq.serialize_element(&ExactSlice(row))?;
    }
    seq.end()
}
