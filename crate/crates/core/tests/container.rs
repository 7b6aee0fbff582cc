use framesel_core::model::{
    decode_stack, encode_stack, read_probability_stack, write_probability_stack, ProbabilityStack,
};
use framesel_core::Error;
use proptest::prelude::*;

fn stack_strategy() -> impl Strategy<Value = ProbabilityStack> {
    (1usize..9, 1usize..9, 1usize..4, 1usize..4).prop_flat_map(|(w, h, k, t)| {
        prop::collection::vec(0.0f32..=1.0, w * h * k * t)
            .prop_map(move |data| ProbabilityStack::new("frame", w, h, k, t, data).unwrap())
    })
}

proptest! {
    #[test]
    fn read_write_is_identity(stack in stack_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame.alpm");
        write_probability_stack(&stack, &path).unwrap();
        let back = read_probability_stack(&path).unwrap();
        prop_assert_eq!(back.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        stack.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(back, stack);
    }
}

#[test]
fn half_valued_4x4_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("half.alpm");
    let stack = ProbabilityStack::filled("half", 4, 4, 2, 1, 0.5).unwrap();
    write_probability_stack(&stack, &path).unwrap();
    assert_eq!(read_probability_stack(&path).unwrap(), stack);
}

#[test]
fn writes_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data: Vec<f32> = (0..60).map(|i| (i as f32) / 59.0).collect();
    let stack = ProbabilityStack::new("s", 5, 4, 3, 1, data).unwrap();
    let (a, b) = (dir.path().join("a.alpm"), dir.path().join("b.alpm"));
    write_probability_stack(&stack, &a).unwrap();
    write_probability_stack(&stack, &b).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn out_of_range_value_names_location() {
    let stack = ProbabilityStack::filled("bad", 3, 2, 2, 1, 0.1).unwrap();
    let mut bytes = encode_stack(&stack);
    bytes[24..28].copy_from_slice(&1.25f32.to_le_bytes());
    let err = decode_stack(&bytes, "bad").unwrap_err();
    assert!(matches!(
        err,
        Error::ValueOutOfRange {
            branch: 0,
            x: 0,
            y: 0,
            ..
        }
    ));
    assert!(err.to_string().contains("branch 0"));
}

#[test]
fn caltech_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("set00_v000_0000.alpm");
    let stack = ProbabilityStack::filled("set00_v000_0000", 640, 480, 5, 1, 0.01).unwrap();
    write_probability_stack(&stack, &path).unwrap();
    let back = read_probability_stack(&path).unwrap();
    assert_eq!((back.width(), back.height(), back.branches()), (640, 480, 5));
    assert_eq!(back.frame_id, "set00_v000_0000");
}

#[test]
fn missing_file_is_io_error() {
    let err = read_probability_stack("/nonexistent/x.alpm").unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}
