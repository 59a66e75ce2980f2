macro_rules! example {
    ($name:ident, $path:literal) => {
        #[allow(dead_code)]
        #[path = $path]
        mod $name;

        #[test]
        fn $name() {
            $name::run_example();
        }
    };
}

example!(parse_model, "../examples/parse_model.rs");
example!(validate_models, "../examples/validate_models.rs");
example!(normalize_atm, "../examples/normalize_atm.rs");
example!(events_and_chronology, "../examples/events_and_chronology.rs");
example!(simulate_atm, "../examples/simulate_atm.rs");
example!(recurrence, "../examples/recurrence.rs");
example!(render_dot, "../examples/render_dot.rs");
example!(json_roundtrip, "../examples/json_roundtrip.rs");
