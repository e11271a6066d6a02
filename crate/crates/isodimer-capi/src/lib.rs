//! C ABI surface for the isodimer library.
