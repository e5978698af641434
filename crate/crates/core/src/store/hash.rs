use std::fmt;
use std::str::FromStr;

use md5::{Digest, Md5};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

/// 32 lowercase hex characters naming a stored object.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ContentHash(String);

impl ContentHash {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn from_digest(bytes: &[u8]) -> Self {
        ContentHash(hex::encode(&bytes[..16]))
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ContentHash {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() == 32 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            Ok(ContentHash(s.to_owned()))
        } else {
            Err(format!("{s:?} is not a 32-character lowercase hex digest"))
        }
    }
}

impl TryFrom<String> for ContentHash {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ContentHash> for String {
    fn from(h: ContentHash) -> String {
        h.0
    }
}

/// Digest used to name objects. MD5 is the default; SHA-256 is offered
/// truncated to its first 128 bits so names keep the same shape.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DigestAlgorithm {
    #[default]
    Md5,
    Sha256,
}

impl DigestAlgorithm {
    pub fn hash(self, bytes: &[u8]) -> ContentHash {
        match self {
            DigestAlgorithm::Md5 => ContentHash::from_digest(&Md5::digest(bytes)),
            DigestAlgorithm::Sha256 => ContentHash::from_digest(&Sha256::digest(bytes)),
        }
    }
}

/// MD5 of `bytes` as lowercase hex.
pub fn hash_content(bytes: &[u8]) -> ContentHash {
    DigestAlgorithm::Md5.hash(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rfc1321_vectors() {
        assert_eq!(hash_content(b"").as_str(), "d41d8cd98f00b204e9800998ecf8427e");
        assert_eq!(hash_content(b"abc").as_str(), "900150983cd24fb0d6963f7d28e17f72");
        assert_eq!(
            hash_content(b"message digest").as_str(),
            "f96b697d7cb7938d525a2f31aaf161d0"
        );
    }

    #[test]
    fn sha256_is_truncated_to_32_hex() {
        let h = DigestAlgorithm::Sha256.hash(b"abc");
        assert_eq!(h.as_str(), "ba7816bf8f01cfea414140de5dae2223");
    }

    #[test]
    fn parse_rejects_bad_shapes() {
        assert!("D41D8CD98F00B204E9800998ECF8427E".parse::<ContentHash>().is_err());
        assert!("abc".parse::<ContentHash>().is_err());
        assert!("d41d8cd98f00b204e9800998ecf8427e".parse::<ContentHash>().is_ok());
    }
}
