use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A public matrix over `Z_p` sent to the peer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token(Matrix);

impl Token {
    pub fn new(matrix: Matrix) -> Self {
        Token(matrix)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Fails with [`Error::RestartRequired`] when any entry is zero.
    pub fn ensure_zero_free(&self) -> Result<()> {
        if self.0.contains_zero() {
            Err(Error::RestartRequired)
        } else {
            Ok(())
        }
    }
}

impl From<Matrix> for Token {
    fn from(m: Matrix) -> Self {
        Token(m)
    }
}
