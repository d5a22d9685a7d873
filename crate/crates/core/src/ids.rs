//! Serializers writing 0-based vertex ids as 1-based.

use serde::Serializer;

pub(crate) fn one_based<S: Serializer>(v: &usize, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u64(*v as u64 + 1)
}

pub(crate) fn one_based_seq<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x + 1))
}
