//! Builds a model in code, then parses the same model from text.

use tmkit::{model_equal, parse, Model, StageKind};

pub fn run_example() {
    let mut built = Model::new();
    let user = built.add_thimac(None, "User").unwrap();
    let pin = built.add_thimac(Some(user), "pin").unwrap();
    for kind in [StageKind::Create, StageKind::Release, StageKind::Transfer] {
        built.add_stage(pin, kind).unwrap();
    }
    built.add_flow_path("User.pin.create", "User.pin.release").unwrap();
    built.add_flow_path("User.pin.release", "User.pin.transfer").unwrap();

    let src = "
        thimac User {
            thimac pin { stage create; stage release; stage transfer; }
        }
        flow User.pin.create -> User.pin.release -> User.pin.transfer;
    ";
    let parsed = parse(src, "pin.tm");
    let model = parsed.model.expect("parses");
    println!("{} thimacs, {} stages, {} flows", model.thimacs().count(), model.stages().count(), model.flows().len());
    for s in model.stages() {
        println!("  {}", model.qualified_name(s.id));
    }
    assert!(model_equal(&built, &model));
    println!("built and parsed models are equal");

    let bad = parse("thimac A { stage process; }\nmemory A.process ~> A.process;\n", "bad.tm");
    for d in &bad.diagnostics {
        println!("{d}");
    }
}

fn main() {
    run_example();
}
