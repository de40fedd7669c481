// Links the system OpenBLAS, which bundles BLAS, CBLAS, and LAPACK symbols
// in one shared library. We deliberately avoid the *-src provider crates:
// nothing is built from source and any full BLAS/LAPACK implementation
// exposing the standard symbol set will do.
fn main() {
    println!("cargo:rustc-link-lib=dylib=openblas");
}
