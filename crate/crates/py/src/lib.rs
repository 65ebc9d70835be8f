//! placeholder while the core library is under construction
