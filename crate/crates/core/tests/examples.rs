macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/",
                stringify!($name),
                ".rs"
            ));
        }

        #[test]
        fn $name() {
            $name::run_example().expect(concat!(stringify!($name), " should run"));
        }
    };
}

example!(product_gadgets);
example!(multiply_pow2);
example!(multiply_rect_square);
example!(invert_matrix);
example!(neumann_identities);
example!(network_files);
example!(count_formulas);
example!(compose_networks);
