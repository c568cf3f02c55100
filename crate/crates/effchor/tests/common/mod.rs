#![allow(dead_code)]

use effchor_core::Value;
use proptest::prelude::*;

/// Values nested at most `depth` levels deep.
pub fn value_strategy(depth: u32) -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Unit),
        any::<bool>().prop_map(Value::Bool),
        any::<i64>().prop_map(Value::Int),
        ".{0,12}".prop_map(Value::str),
    ];
    leaf.prop_recursive(depth, 64, 4, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Value::pair(a, b)),
            proptest::collection::vec(inner, 0..4).prop_map(Value::List),
        ]
    })
}
