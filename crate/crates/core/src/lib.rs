pub mod field;
pub mod matgrid;
pub mod par;
pub mod polycode;
pub mod combin;
pub mod secretshare;
pub mod streamcipher;
pub mod simnet;
pub mod schemes;
