package controllers

import (
	metav1 "k8s.io/apimachinery/pkg/apis/meta/v1"
)

// AppSpec defines the desired state of App.
type AppSpec struct {
	Replicas int32 `json:"replicas"`
}

// AppStatus is written by the operator, but users with update access to the
// status subresource can still forge it.
type AppStatus struct {
	ObservedConfigNamespace string `json:"observedConfigNamespace,omitempty"`
}

// App is the Schema for the apps API.
// +kubebuilder:object:root=true
// +kubebuilder:subresource:status
type App struct {
	metav1.TypeMeta   `json:",inline"`
	metav1.ObjectMeta `json:"metadata,omitempty"`

	Spec   AppSpec   `json:"spec,omitempty"`
	Status AppStatus `json:"status,omitempty"`
}
