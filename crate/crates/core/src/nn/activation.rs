/// Logistic sigmoid, evaluated without overflow for large `|x|`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Derivative of the sigmoid expressed through its output `s = sigmoid(x)`.
#[inline]
pub fn sigmoid_derivative(s: f64) -> f64 {
    s * (1.0 - s)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    x.tanh()
}

/// Derivative of tanh expressed through its output `t = tanh(x)`.
#[inline]
pub fn tanh_derivative(t: f64) -> f64 {
    1.0 - t * t
}
