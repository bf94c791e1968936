package controllers

import (
	metav1 "k8s.io/apimachinery/pkg/apis/meta/v1"
)

// SecretReference points at a Secret holding application credentials.
type SecretReference struct {
	Name      string `json:"name"`
	Namespace string `json:"namespace,omitempty"`
}

// AppSpec defines the desired state of App.
type AppSpec struct {
	Image     string          `json:"image"`
	SecretRef SecretReference `json:"secretRef"`
}

// AppStatus defines the observed state of App.
type AppStatus struct {
	Ready bool `json:"ready"`
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

// AppList contains a list of App.
// +kubebuilder:object:root=true
type AppList struct {
	metav1.TypeMeta `json:",inline"`
	metav1.ListMeta `json:"metadata,omitempty"`
	Items           []App `json:"items"`
}
