use std::time::Duration;

use stormcast::ingest::{FetchError, Transport};

/// Blocking HTTP transport for the SDO archive.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl Default for HttpTransport {
    fn default() -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        Self { agent }
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<Vec<u8>, FetchError> {
        match self.agent.get(url).call() {
            Ok(mut resp) => resp
                .body_mut()
                .with_config()
                .limit(64 << 20)
                .read_to_vec()
                .map_err(|e| FetchError::Other(e.to_string())),
            Err(ureq::Error::StatusCode(404)) => Err(FetchError::NotFound),
            Err(ureq::Error::HostNotFound | ureq::Error::ConnectionFailed) => Err(FetchError::Offline),
            Err(e) => Err(FetchError::Other(e.to_string())),
        }
    }
}
