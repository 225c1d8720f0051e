//! JSON number formatting: decimals carry 17 significant digits so every
//! f64 round-trips exactly through emitted files.

use serde::Serializer;

pub fn sig17<S: Serializer>(v: &f64, ser: S) -> Result<S::Ok, S::Error> {
    match format!("{:.16e}", v).parse::<serde_json::Number>() {
        Ok(n) => serde::Serialize::serialize(&n, ser),
        Err(_) => ser.serialize_f64(*v),
    }
}

pub fn opt_sig17<S: Serializer>(v: &Option<f64>, ser: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => sig17(x, ser),
        None => ser.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use serde::Serialize;

    #[derive(Serialize)]
    struct Wrap {
        #[serde(serialize_with = "super::sig17")]
        x: f64,
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.05, 1.0 / 3.0, 2f64.sqrt(), 6.02e23, -1.25e-17] {
            let text = serde_json::to_string(&Wrap { x }).unwrap();
            let back: serde_json::Value = text.parse::<serde_json::Value>().unwrap();
            let y = back["x"].as_f64().unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "{text}");
        }
    }
}
