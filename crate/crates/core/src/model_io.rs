//! Versioned JSON envelope shared by every trained artifact.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait ModelFile: Serialize + DeserializeOwned {
    const FORMAT: &'static str;
    const VERSION: u32;

    /// Invariant check run after loading.
    fn validate(&self) -> Result<()>;
}

#[derive(Serialize)]
struct EnvelopeOut<'a, M> {
    format: &'static str,
    version: u32,
    model: &'a M,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    format: String,
    version: u32,
    model: serde_json::Value,
}

pub fn serialize_model<M: ModelFile>(model: &M) -> String {
    let env = EnvelopeOut {
        format: M::FORMAT,
        version: M::VERSION,
        model,
    };
    serde_json::to_string_pretty(&env).expect("model serialization is infallible") + "\n"
}

pub fn load_model<M: ModelFile>(text: &str) -> Result<M> {
    let env: EnvelopeIn = serde_json::from_str(text)?;
    if env.format != M::FORMAT || env.version != M::VERSION {
        return Err(Error::Version {
            expected: M::FORMAT,
            found: env.format,
            version: env.version,
            supported: M::VERSION,
        });
    }
    let model: M = serde_json::from_value(env.model)?;
    model.validate()?;
    Ok(model)
}
