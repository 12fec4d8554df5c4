use indexmap::IndexMap;

use super::Tensor;
use crate::error::{arg_err, shape_err, Result};
use crate::scalar::Scalar;

/// A named parameter with its gradient slot. Both always share one shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Param<S> {
    value: Tensor<S>,
    grad: Tensor<S>,
}

impl<S: Scalar> Param<S> {
    pub fn new(value: Tensor<S>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self { value, grad }
    }

    pub fn value(&self) -> &Tensor<S> {
        &self.value
    }

    pub fn grad(&self) -> &Tensor<S> {
        &self.grad
    }

    pub fn shape(&self) -> &[usize] {
        self.value.shape()
    }

    pub fn data(&self) -> &[S] {
        self.value.data()
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        self.value.data_mut()
    }

    pub fn grad_data(&self) -> &[S] {
        self.grad.data()
    }

    pub fn grad_mut(&mut self) -> &mut [S] {
        self.grad.data_mut()
    }

    /// Splits into `(values, grads)` for optimizer updates.
    pub fn value_and_grad_mut(&mut self) -> (&mut [S], &[S]) {
        (self.value.data_mut(), self.grad.data())
    }
}

/// Ordered collection of named parameters. Iteration follows insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore<S> {
    params: IndexMap<String, Param<S>>,
}

impl<S: Scalar> ParamStore<S> {
    pub fn new() -> Self {
        Self { params: IndexMap::new() }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor<S>) -> Result<()> {
        let name = name.into();
        if self.params.contains_key(&name) {
            return arg_err(format!("duplicate parameter name `{name}`"));
        }
        self.params.insert(name, Param::new(value));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Param<S>> {
        self.params.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Param<S>> {
        self.params.get_mut(name)
    }

    pub fn param(&self, name: &str) -> Result<&Param<S>> {
        self.params
            .get(name)
            .ok_or_else(|| crate::Error::Argument(format!("unknown parameter `{name}`")))
    }

    pub fn param_mut(&mut self, name: &str) -> Result<&mut Param<S>> {
        self.params
            .get_mut(name)
            .ok_or_else(|| crate::Error::Argument(format!("unknown parameter `{name}`")))
    }

    pub fn value(&self, name: &str) -> Result<&Tensor<S>> {
        Ok(self.param(name)?.value())
    }

    /// Overwrites a parameter's values, keeping its shape.
    pub fn set_value(&mut self, name: &str, data: &[S]) -> Result<()> {
        let p = self.param_mut(name)?;
        if p.value.len() != data.len() {
            return shape_err(format!("`{name}` holds {} values, got {}", p.value.len(), data.len()));
        }
        p.value.data_mut().copy_from_slice(data);
        Ok(())
    }

    /// Adds `grad` into the gradient slot of `name`.
    pub fn accumulate_grad(&mut self, name: &str, grad: &[S]) -> Result<()> {
        let p = self.param_mut(name)?;
        if p.grad.len() != grad.len() {
            return shape_err(format!("`{name}` gradient holds {} values, got {}", p.grad.len(), grad.len()));
        }
        for (acc, &g) in p.grad.data_mut().iter_mut().zip(grad) {
            *acc += g;
        }
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        for p in self.params.values_mut() {
            p.grad.fill(S::zero());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param<S>)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param<S>)> {
        self.params.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total scalar count over all parameters.
    pub fn num_elements(&self) -> usize {
        self.params.values().map(|p| p.value.len()).sum()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    /// Converts values and gradients to another precision.
    pub fn cast<T: Scalar>(&self) -> ParamStore<T> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|(k, p)| {
                    (k.clone(), Param { value: p.value.cast(), grad: p.grad.cast() })
                })
                .collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.params.values().all(|p| p.value.is_finite())
    }
}
