pub mod adversary_list;
pub mod certs;
pub mod crypto;
pub mod messages;
pub mod protocol;
pub mod selftest;
pub mod sim;
pub mod sweep;
