pub mod library;
pub mod oracle;
pub mod random;
pub mod synthetic;
