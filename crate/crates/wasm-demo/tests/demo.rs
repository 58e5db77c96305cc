use gptcm_wasm_demo::Demo;

fn parse(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn operations_run_in_order() {
    let mut demo = Demo::default();
    assert!(demo.run_fit("MRF2", 300, 100, 1).unwrap_err().contains("simulate"));

    let sim = parse(&demo.run_simulate(60, 3).unwrap());
    assert_eq!(sim["n"], 60);
    let km = sim["kaplan_meier"]["survival"].as_array().unwrap();
    assert!(km.windows(2).all(|w| w[1].as_f64() <= w[0].as_f64()));
    assert!(demo.run_evaluate(20).unwrap_err().contains("fit"));

    let fit = parse(&demo.run_fit("mrf2", 300, 100, 1).unwrap());
    assert_eq!(fit["variant"], "GPTCM-MRF2");
    assert_eq!(fit["draws"], 200);
    assert_eq!(fit["coefficients"].as_array().unwrap().len(), 30);
    assert_eq!(fit["loglik"].as_array().unwrap().len(), 200);

    let ev = parse(&demo.run_evaluate(20).unwrap());
    assert_eq!(ev["times"].as_array().unwrap().len(), 20);
    assert!(ev["integrated_model"].as_f64().unwrap() > 0.0);
    assert!(ev["integrated_kaplan_meier"].as_f64().unwrap() > 0.0);
}

#[test]
fn bad_inputs_are_reported() {
    let mut demo = Demo::default();
    assert!(demo.run_simulate(5, 1).is_err());
    demo.run_simulate(40, 1).unwrap();
    assert!(demo.run_fit("MRF9", 300, 100, 1).unwrap_err().contains("unknown variant"));
    assert!(demo.run_fit("Ber1", 100, 200, 1).is_err());
    let fit = parse(&demo.run_fit("noBVS1", 300, 100, 2).unwrap());
    assert!(fit["accuracy"].is_null());
}
