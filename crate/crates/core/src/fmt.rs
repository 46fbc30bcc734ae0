//! Text formatting shared by the CSV writers.

/// 17 significant digits in scientific notation; round-trips every `f64`.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Optional value, empty cell when absent.
pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// Serde adapter writing non-finite floats as the strings used by [`float`].
pub mod json_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::float(*x))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad float {other:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(f64::NAN), "nan");
        assert_eq!(float(f64::NEG_INFINITY), "-inf");
        assert_eq!(opt_float(None), "");
    }

    #[derive(serde::Serialize, serde::Deserialize, PartialEq, Debug)]
    struct Wrap(#[serde(with = "json_float")] f64);

    #[test]
    fn json_non_finite() {
        let text = serde_json::to_string(&Wrap(f64::INFINITY)).unwrap();
        assert_eq!(text, "\"inf\"");
        assert_eq!(serde_json::from_str::<Wrap>(&text).unwrap(), Wrap(f64::INFINITY));
        assert_eq!(serde_json::from_str::<Wrap>("0.25").unwrap(), Wrap(0.25));
    }
}
