macro_rules! example {
    ($module:ident, $file:literal, $test:ident) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(kernel_example, "kernel.rs", kernel_example_runs);
example!(ensembles_example, "ensembles.rs", ensembles_example_runs);
example!(ic_tomography_example, "ic_tomography.rs", ic_tomography_example_runs);
example!(convexity_audit_example, "convexity_audit.rs", convexity_audit_example_runs);
example!(quasi_linear_example, "quasi_linear.rs", quasi_linear_example_runs);
example!(stochastic_example, "stochastic.rs", stochastic_example_runs);
example!(gpt_certificate_example, "gpt_certificate.rs", gpt_certificate_example_runs);
example!(wigner_friend_example, "wigner_friend.rs", wigner_friend_example_runs);
example!(protocol_search_example, "protocol_search.rs", protocol_search_example_runs);
example!(suite_summary_example, "suite_summary.rs", suite_summary_example_runs);
