use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::FcnConfig;
use crate::model::{FcnModel, Param};
use crate::FcnError;

pub const FORMAT_TAG: &str = "fcn-v1";

#[derive(Serialize, Deserialize)]
struct Doc {
    format: String,
    config: FcnConfig,
    params: Vec<ParamDoc>,
}

/// Parameter payloads are little-endian `f64` bytes in hex.
#[derive(Serialize, Deserialize)]
struct ParamDoc {
    name: String,
    shape: Vec<usize>,
    data: String,
}

impl FcnModel {
    pub fn to_json(&self) -> String {
        let params = self
            .params()
            .iter()
            .map(|p| {
                let bytes: Vec<u8> = p.data.iter().flat_map(|v| v.to_le_bytes()).collect();
                ParamDoc { name: p.name.clone(), shape: p.shape.clone(), data: hex::encode(bytes) }
            })
            .collect();
        let doc = Doc { format: FORMAT_TAG.into(), config: self.config().clone(), params };
        serde_json::to_string_pretty(&doc).expect("serializable document")
    }

    pub fn from_json(text: &str) -> Result<Self, FcnError> {
        let doc: Doc = serde_json::from_str(text)?;
        if doc.format != FORMAT_TAG {
            return Err(FcnError::Format(format!("format {:?}, expected {FORMAT_TAG:?}", doc.format)));
        }
        let mut params = Vec::with_capacity(doc.params.len());
        for p in doc.params {
            let bytes = hex::decode(&p.data).map_err(|e| FcnError::Format(format!("{}: {e}", p.name)))?;
            if bytes.len() % 8 != 0 {
                return Err(FcnError::Format(format!("{}: payload length {} not a multiple of 8", p.name, bytes.len())));
            }
            let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
            params.push(Param { name: p.name, shape: p.shape, data });
        }
        FcnModel::from_parts(doc.config, params)
    }

    pub fn save(&self, path: &Path) -> Result<(), FcnError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FcnError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
