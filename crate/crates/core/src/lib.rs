//! Gait-speed monitoring from dual-antenna UHF RFID RSSI streams.

pub mod detect;
pub mod eval;
pub mod gateway;
pub mod session;
pub mod sim;
